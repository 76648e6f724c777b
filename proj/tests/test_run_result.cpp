#include "doctest.h"
#include "resgene/run_result.hpp"

using namespace resgene;

namespace {

run::RunResult sample() {
  run::RunResult r;
  r.model = "resgene-t";
  r.dataset = "Wheat";
  r.trait = "GY";
  r.model_config = net::ModelConfig::small_input(4, 10);
  r.train_config = train::TrainConfig{};
  r.layout = tensorize::plan_layout(400, tensorize::LayoutMode::kTensor3d, 4);
  r.folds = 3;
  r.fold_pcc = {0.25, std::nullopt, 0.125};
  r.mean_pcc = 0.1875;
  r.undefined_folds = 1;
  r.pooled_pcc = 0.2;
  r.loss_traces = {{1.0, 0.5}, {0.9, 0.4}, {1.1, 0.6}};
  r.fold_lambda = {std::nullopt, std::nullopt, std::nullopt};
  r.seed = 99;
  r.wall_seconds = 1.5;
  return r;
}

}  // namespace

TEST_CASE("serialize then parse is the identity") {
  const auto r = sample();
  CHECK(run::parse(run::serialize(r)) == r);
  run::RunResult ridge;
  ridge.model = "ridge";
  ridge.ridge_config = run::RidgeConfig{{0.1, 10}, 4};
  ridge.fold_lambda = {10.0, 0.1};
  ridge.fold_pcc = {0.3, 0.5};
  ridge.mean_pcc = 0.4;
  ridge.folds = 2;
  CHECK(run::parse(run::serialize(ridge)) == ridge);
  CHECK(run::serialize(r) == run::serialize(run::parse(run::serialize(r))));
}

TEST_CASE("the stored mean is the mean of the defined folds") {
  const auto r = run::parse(run::serialize(sample()));
  double sum = 0;
  std::size_t n = 0;
  for (const auto& f : r.fold_pcc) {
    if (f) {
      sum += *f;
      ++n;
    }
  }
  CHECK(n + r.undefined_folds == r.folds);
  CHECK(*r.mean_pcc == doctest::Approx(sum / n).epsilon(1e-15));
}

TEST_CASE("undefined values serialize as null") {
  const auto j = run::to_json(sample());
  CHECK(j.at("fold_pcc")[1].is_null());
  CHECK(j.at("schema") == run::kSchemaVersion);
}

TEST_CASE("schema violations") {
  auto j = run::to_json(sample());
  j.erase("trait");
  CHECK_THROWS_AS(run::from_json(j), run::SchemaError);
  j = run::to_json(sample());
  j["schema"] = 999;
  CHECK_THROWS_AS(run::from_json(j), run::SchemaError);
  CHECK_THROWS_AS(run::parse("{not json"), run::SchemaError);
}
