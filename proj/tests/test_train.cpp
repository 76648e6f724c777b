#include <cmath>

#include "doctest.h"
#include "resgene/rng.hpp"
#include "resgene/stats.hpp"
#include "resgene/train.hpp"

using namespace resgene;
using namespace resgene::train;

namespace {

net::ModelConfig tiny(std::size_t c, std::size_t s) {
  auto cfg = net::ModelConfig::small_input(c, s);
  cfg.widths = {4, 8};
  cfg.blocks = {1, 1};
  return cfg;
}

// n samples of 1 x 4 x 4 (d = 16) with y linear in the inputs.
struct Toy {
  std::vector<double> x;
  std::vector<double> y;
};

Toy linear_toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> beta(16);
  for (auto& b : beta) b = rng.normal();
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0;
    for (std::size_t j = 0; j < 16; ++j) {
      const double v = static_cast<double>(rng.below(3));
      t.x.push_back(v);
      y += beta[j] * v;
    }
    t.y.push_back(y);
  }
  return t;
}

template <typename T>
std::vector<std::vector<T>> snapshot(const net::Network<T>& n) {
  std::vector<std::vector<T>> out;
  for (const auto& [name, t] : n.state_dict()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TEST_CASE("sgd_update hand iterations") {
  std::vector<double> w{1.0}, g{0.5}, v{0.0};
  sgd_update<double>(w, g, v, 0.1, 0.0);
  CHECK(w[0] == doctest::Approx(0.95).epsilon(1e-15));

  std::vector<double> w2{0.0}, g2{1.0}, v2{0.0};
  sgd_update<double>(w2, g2, v2, 0.1, 0.9);
  CHECK(w2[0] == doctest::Approx(-0.1).epsilon(1e-15));
  sgd_update<double>(w2, g2, v2, 0.1, 0.9);
  CHECK(v2[0] == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(w2[0] == doctest::Approx(-0.29).epsilon(1e-15));

  std::vector<double> w3{0.3, -2.0}, g3{0.0, 0.0}, v3{0.0, 0.0};
  sgd_update<double>(w3, g3, v3, 0.5, 0.9);
  CHECK(w3 == std::vector<double>{0.3, -2.0});
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(validate(c), TrainError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), TrainError);
  c = {};
  c.learning_rate = -0.1;
  CHECK_THROWS_AS(validate(c), TrainError);
  c = {};
  c.momentum = 1.0;
  CHECK_THROWS_AS(validate(c), TrainError);
}

TEST_CASE("epoch batches cover every row once") {
  for (std::size_t n : {2u, 33u, 64u, 65u, 100u}) {
    for (std::size_t bs : {1u, 32u, 64u}) {
      const auto batches = epoch_batches(n, bs, 9);
      std::vector<int> hits(n, 0);
      for (const auto& b : batches) {
        CHECK(b.size() >= (bs == 1 ? 1u : 2u));
        CHECK(b.size() <= bs + 1);
        for (std::size_t i : b) ++hits[i];
      }
      for (int h : hits) CHECK(h == 1);
    }
  }
  CHECK(epoch_batches(33, 32, 1).size() == 1);  // the lone 33rd row joins the batch
  CHECK(epoch_batches(50, 32, 1) == epoch_batches(50, 32, 1));
  CHECK(epoch_batches(50, 32, 1) != epoch_batches(50, 32, 2));
}

TEST_CASE("lr = 0 leaves every parameter and running statistic unchanged") {
  const auto toy = linear_toy(40, 1);
  net::Network<double> network(tiny(1, 4));
  // Running statistics still move in train mode; compare parameters only.
  std::vector<std::vector<double>> before;
  for (const auto& [name, t] : network.named_parameters()) before.emplace_back(t.data().begin(), t.data().end());
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.momentum = 0.9;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  train_fold<double>(network, toy.x, toy.y, cfg);
  std::size_t i = 0;
  for (const auto& [name, t] : network.named_parameters()) {
    CHECK(std::equal(t.data().begin(), t.data().end(), before[i++].begin()));
  }
}

TEST_CASE("loss decreases on a learnable linear signal") {
  const auto toy = linear_toy(64, 2);
  net::Network<double> network(tiny(1, 4));
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.epochs = 20;
  const auto r = train_fold<double>(network, toy.x, toy.y, cfg);
  REQUIRE(r.loss_trace.size() == 20);
  CHECK(r.loss_trace[19] < r.loss_trace[0]);
  CHECK_FALSE(r.zero_variance_warning);
}

TEST_CASE("same seed gives identical traces and parameters") {
  const auto toy = linear_toy(48, 3);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.01;
  cfg.seed = 5;
  auto run = [&] {
    auto mc = tiny(1, 4);
    mc.dropout = 0.2;
    net::Network<float> network(mc);
    const std::vector<float> xf(toy.x.begin(), toy.x.end());
    const auto r = train_fold<float>(network, xf, toy.y, cfg);
    return std::make_pair(r.loss_trace, snapshot(network));
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("constant targets skip standardization with a warning") {
  const auto toy = linear_toy(20, 4);
  std::vector<double> flat(20, 3.5);
  net::Network<double> network(tiny(1, 4));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  const auto r = train_fold<double>(network, toy.x, flat, cfg);
  CHECK(r.zero_variance_warning);
  CHECK(r.scaler.mean == 0.0);
  CHECK(r.scaler.scale == 1.0);
}

TEST_CASE("predictions come back on the target scale") {
  auto toy = linear_toy(40, 6);
  for (auto& y : toy.y) y = 1000 + 50 * y;
  net::Network<double> network(tiny(1, 4));
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  const auto r = train_fold<double>(network, toy.x, toy.y, cfg);
  CHECK(r.scaler.scale > 1.0);
  const auto pred = predict<double>(network, r.scaler, toy.x, 40);
  const auto raw = network.predict(toy.x, 40);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(pred[i] == doctest::Approx(r.scaler.to_target(raw[i])).epsilon(1e-12));
  }
  // De-standardization is affine, so the correlation is untouched.
  CHECK(stats::pcc(pred, toy.y) ==
        doctest::Approx(stats::pcc(std::vector<double>(raw.begin(), raw.end()), toy.y))
            .epsilon(1e-12));
  double mean = 0;
  for (double p : pred) mean += p / 40;
  CHECK(std::abs(mean - 1000) < 500);
}
