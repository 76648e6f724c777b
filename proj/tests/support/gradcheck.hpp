#pragma once

// Central finite-difference gradient checks for the autodiff engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "resgene/autodiff.hpp"
#include "resgene/rng.hpp"

namespace gradcheck {

using resgene::ad::Tensor;

struct Evaluation {
  Tensor<double> loss;
  // Smallest distance of any relu input or maxpool runner-up gap from a
  // kink; +inf when the graph has none.
  double kink_distance = std::numeric_limits<double>::infinity();
};

// Builds the scalar loss from the given leaves.
using Builder = std::function<Evaluation(const std::vector<Tensor<double>>&)>;

inline constexpr double kStep = 1e-5;
inline constexpr double kKinkMargin = 1e-6;

// |analytic - numeric| / max(|analytic|, |numeric|, floor). check() sets the
// floor to 1e-3 of the largest analytic gradient in the instance (at least
// 1e-6), so entries far below the instance's scale are judged against the
// differencing noise rather than their own magnitude.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct Result {
  double max_error = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
  bool near_kink = false;
};

// Compares backward() against central differences for every element of
// every leaf.
inline Result check(const Builder& build, std::vector<Tensor<double>> leaves) {
  Result r;
  auto base = build(leaves);
  if (base.kink_distance < kKinkMargin) {
    r.near_kink = true;
    return r;
  }
  resgene::ad::backward(base.loss);
  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
    if (analytic.back().empty()) analytic.back().assign(leaf.numel(), 0.0);
  }
  double scale = 0;
  for (const auto& g : analytic) {
    for (double v : g) scale = std::max(scale, std::abs(v));
  }
  const double floor = std::max(1e-6, 1e-3 * scale);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto values = leaves[l].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + kStep;
      const double up = build(leaves).loss.item();
      values[i] = keep - kStep;
      const double down = build(leaves).loss.item();
      values[i] = keep;
      const double numeric = (up - down) / (2 * kStep);
      const double err = relative_error(analytic[l][i], numeric, floor);
      if (err > r.max_error) {
        r.max_error = err;
        r.worst_analytic = analytic[l][i];
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

inline Tensor<double> random_leaf(resgene::Rng& rng, resgene::ad::Shape shape,
                                  double scale = 1.0) {
  std::vector<double> v(resgene::ad::numel(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor<double>::from(std::move(shape), std::move(v), true);
}

inline std::vector<double> random_vector(resgene::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline double min_abs(std::span<const double> v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, std::abs(x));
  return m;
}

// Smallest gap between the largest and second-largest entry of any pooling
// window (padding cells never win). after_relu skips windows whose max is
// zero: ties there sit behind a relu that passes no gradient anyway.
inline double pool_gap(const Tensor<double>& x, std::size_t k, std::size_t stride,
                       std::size_t pad, bool after_relu = false) {
  const auto& s = x.shape();
  const std::size_t n = s[0], c = s[1], h = s[2], w = s[3];
  const std::size_t oh = (h + 2 * pad - k) / stride + 1;
  const std::size_t ow = (w + 2 * pad - k) / stride + 1;
  double gap = std::numeric_limits<double>::infinity();
  const auto v = x.data();
  for (std::size_t b = 0; b < n * c; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double first = -std::numeric_limits<double>::infinity();
        double second = first;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) {
              continue;
            }
            const double val = v[b * h * w + static_cast<std::size_t>(iy) * w +
                                 static_cast<std::size_t>(ix)];
            if (val > first) {
              second = first;
              first = val;
            } else if (val > second) {
              second = val;
            }
          }
        }
        if (after_relu && first <= 0.0) continue;
        if (std::isfinite(second)) gap = std::min(gap, first - second);
      }
    }
  }
  return gap;
}

}  // namespace gradcheck
