#include "doctest.h"
#include "resgene/experiment.hpp"
#include "synth_dataset.hpp"

using namespace resgene;
using namespace resgene::experiment;

namespace {

ExperimentConfig tiny(ModelKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.dataset = "synthetic";
  c.trait = "Y";
  c.widths = {4, 8};
  c.blocks = {1, 1};
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.learning_rate = 0.01;
  c.folds = 3;
  c.seed = 17;
  c.reproducible = true;
  if (kind == ModelKind::kResGeneT) c.channels = 4;
  return c;
}

}  // namespace

TEST_CASE("default grids") {
  const auto g2 = enumerate(GridSpec::defaults(ModelKind::kResGene2d));
  const auto gt = enumerate(GridSpec::defaults(ModelKind::kResGeneT));
  CHECK(g2.size() == 8);
  CHECK(gt.size() == 16);
  CHECK(std::is_sorted(gt.begin(), gt.end()));
  for (const auto& p : g2) CHECK_FALSE(p.channels);
  for (const auto& p : gt) CHECK((*p.channels == 20 || *p.channels == 50));
  CHECK(g2.front() == GridPoint{32, 0.001, 0.1, std::nullopt});
  GridSpec empty;
  empty.dropouts.clear();
  CHECK_THROWS_AS(enumerate(empty), UsageError);
}

TEST_CASE("select_best breaks ties by grid order") {
  const std::vector<GridPoint> pts{{64, 0.01, 0.1, {}}, {32, 0.01, 0.3, {}}, {32, 0.01, 0.1, {}}};
  CHECK(select_best(pts, {0.5, 0.5, 0.5}) == 2);
  CHECK(select_best(pts, {0.6, 0.5, 0.5}) == 0);
  CHECK(select_best(pts, {0.5, 0.5, std::nullopt}) == 1);
  CHECK(select_best(pts, {std::nullopt, std::nullopt, std::nullopt}) == 2);
  CHECK(select_best(pts, {-0.2, std::nullopt, -0.1}) == 2);
  CHECK_THROWS_AS(select_best(pts, {0.1}), UsageError);
}

TEST_CASE("unusable flag combinations are usage errors") {
  auto c = tiny(ModelKind::kResGeneT);
  c.channels.reset();
  CHECK_THROWS_AS(validate(c), UsageError);
  c = tiny(ModelKind::kResGene2d);
  c.channels = 4;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = tiny(ModelKind::kResGene2d);
  c.folds = 1;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = tiny(ModelKind::kResGene2d);
  c.train.batch_size = 0;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = tiny(ModelKind::kResGene2d);
  c.dropout = 1.0;
  CHECK_THROWS_AS(validate(c), UsageError);
  CHECK_THROWS_AS(parse_model("xgboost"), UsageError);
  CHECK(parse_model(model_name(ModelKind::kResGeneT)) == ModelKind::kResGeneT);

  const auto ds = fixtures::synth_dataset(30, 40, 4, 0.5, 1);
  CHECK_THROWS_AS(tune(ds, tiny(ModelKind::kRidge), {}, false), UsageError);
  CHECK_THROWS_AS(tune(ds, tiny(ModelKind::kResGene2d), GridSpec::defaults(ModelKind::kResGeneT),
                       false),
                  UsageError);
}

TEST_CASE("prepare builds the planned layout") {
  const auto ds = fixtures::synth_dataset(30, 40, 4, 0.5, 2);
  const auto p2 = prepare(ds, tiny(ModelKind::kResGene2d));
  CHECK(p2.layout.side == 7);
  CHECK(p2.layout.channels == 1);
  CHECK(p2.inputs.size() == 30 * 49);
  CHECK(p2.model.input_side == 7);
  const auto pt = prepare(ds, tiny(ModelKind::kResGeneT));
  CHECK(pt.layout.side == 4);
  CHECK(pt.layout.channels == 4);
  CHECK(pt.inputs.size() == 30 * 64);
  const auto pr = prepare(ds, tiny(ModelKind::kRidge));
  CHECK(pr.x.size() == 30 * 40);
  CHECK(pr.inputs.empty());
}

TEST_CASE("seeded reproducible runs are byte-identical") {
  const auto ds = fixtures::synth_dataset(30, 40, 4, 0.8, 3);
  for (auto kind : {ModelKind::kResGene2d, ModelKind::kResGeneT, ModelKind::kRidge}) {
    auto c = tiny(kind);
    const auto a = run::serialize(run_experiment(ds, c));
    c.jobs = 3;
    const auto b = run::serialize(run_experiment(ds, c));
    CHECK(a == b);
  }
  auto c = tiny(ModelKind::kResGene2d);
  const auto a = run_experiment(ds, c);
  c.seed = 18;
  CHECK(run::serialize(run_experiment(ds, c)) != run::serialize(a));
  CHECK(a.model == "resgene-2d");
  CHECK(a.fold_pcc.size() == 3);
  CHECK(a.loss_traces.front().size() == 2);
  CHECK(a.wall_seconds == 0.0);
}

TEST_CASE("tuning runs every point and nested selection stays inside the outer fold") {
  const auto ds = fixtures::synth_dataset(30, 40, 4, 0.8, 4);
  GridSpec g;
  g.batch_sizes = {8};
  g.learning_rates = {0.01, 0.001};
  g.dropouts = {0.1};
  auto base = tiny(ModelKind::kResGene2d);
  base.train.epochs = 1;
  const auto r = tune(ds, base, g, true);
  CHECK(r.points.size() == 2);
  CHECK(r.runs.size() == 2);
  std::vector<std::optional<double>> scores;
  for (const auto& run : r.runs) scores.push_back(run.mean_pcc);
  CHECK(r.best == select_best(r.points, scores));
  CHECK(r.runs[0].train_config->learning_rate == 0.001);
  REQUIRE(r.nested);
  CHECK(r.nested->model == "resgene-2d-nested");
  CHECK(r.nested->fold_pcc.size() == 3);
  CHECK(r.nested_choices.size() == 3);
  for (const auto& p : r.nested_choices) {
    CHECK(std::find(r.points.begin(), r.points.end(), p) != r.points.end());
  }
  const auto again = tune(ds, base, g, true);
  CHECK(run::serialize(*again.nested) == run::serialize(*r.nested));
}
