#include <cmath>

#include "doctest.h"
#include "resgene/ridge.hpp"
#include "resgene/rng.hpp"

using namespace resgene;
using namespace resgene::ridge;

namespace {

using Matrix = std::vector<std::vector<double>>;

// Gauss-Jordan inverse with partial pivoting, written out by hand.
Matrix invert(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// (Xc'Xc + lambda I)^-1 Xc'yc with explicit centering.
std::vector<double> brute_force(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                double lambda, double* intercept) {
  const std::size_t n = static_cast<std::size_t>(x.rows()), d = static_cast<std::size_t>(x.cols());
  std::vector<double> mx(d, 0.0);
  double my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    my += y(i) / n;
    for (std::size_t j = 0; j < d; ++j) mx[j] += x(i, j) / n;
  }
  Matrix a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      b[j] += (x(i, j) - mx[j]) * (y(i) - my);
      for (std::size_t l = 0; l < d; ++l) a[j][l] += (x(i, j) - mx[j]) * (x(i, l) - mx[l]);
    }
  }
  for (std::size_t j = 0; j < d; ++j) a[j][j] += lambda;
  const auto inv = invert(a);
  std::vector<double> w(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t l = 0; l < d; ++l) w[j] += inv[j][l] * b[l];
  *intercept = my;
  for (std::size_t j = 0; j < d; ++j) *intercept -= mx[j] * w[j];
  return w;
}

Eigen::MatrixXd random_matrix(Rng& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("hand example without centering") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  Eigen::VectorXd y(2);
  y << 1, 2;
  const auto m = fit_ridge(x, y, 1.0, {false});
  CHECK(m.weights(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(m.intercept == 0.0);
}

TEST_CASE("matches the brute-force normal-equation oracle") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_matrix(rng, 20, 5);
    const auto y = random_vector(rng, 20);
    const double lambda = std::pow(10.0, -1.0 + 3.0 * rng.uniform());
    double b0 = 0;
    const auto w = brute_force(x, y, lambda, &b0);
    const auto m = fit_ridge(x, y, lambda);
    for (int j = 0; j < 5; ++j) CHECK(std::abs(m.weights(j) - w[j]) <= 1e-8 * (1 + std::abs(w[j])));
    CHECK(std::abs(m.intercept - b0) <= 1e-8 * (1 + std::abs(b0)));
  }
}

TEST_CASE("dual path (d > n) matches the brute-force oracle") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_matrix(rng, 8, 15);
    const auto y = random_vector(rng, 8);
    double b0 = 0;
    const auto w = brute_force(x, y, 2.5, &b0);
    const auto m = fit_ridge(x, y, 2.5);
    for (int j = 0; j < 15; ++j) CHECK(std::abs(m.weights(j) - w[j]) <= 1e-8 * (1 + std::abs(w[j])));
    CHECK(std::abs(m.intercept - b0) <= 1e-8 * (1 + std::abs(b0)));
  }
}

TEST_CASE("fitted weights satisfy the regularized normal equations") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int n = 10 + static_cast<int>(rng.below(30)), d = 1 + static_cast<int>(rng.below(40));
    const auto x = random_matrix(rng, n, d);
    const auto y = random_vector(rng, n);
    const double lambda = 0.1 + 10 * rng.uniform();
    const auto m = fit_ridge(x, y, lambda);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const Eigen::MatrixXd a =
        xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd rhs = xc.transpose() * yc;
    CHECK((a * m.weights - rhs).norm() <= 1e-8 * rhs.norm() + 1e-12);
  }
}

TEST_CASE("regularization limits") {
  Rng rng(4);
  const auto x = random_matrix(rng, 30, 6);
  const auto y = random_vector(rng, 30);
  const auto big = fit_ridge(x, y, 1e9);
  CHECK(big.weights.norm() <= 1e-6);
  const auto pred = predict_ridge(big, x);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(pred(i) - y.mean()) <= 1e-5);

  const auto sq = random_matrix(rng, 6, 6);
  const auto ys = random_vector(rng, 6);
  const auto exact = fit_ridge(sq, ys, 0.0, {false});
  CHECK((predict_ridge(exact, sq) - ys).norm() <= 1e-8);

  const auto wide = random_matrix(rng, 4, 9);
  CHECK_THROWS_AS(fit_ridge(wide, random_vector(rng, 4), 0.0), RidgeError);
}

TEST_CASE("shrinkage is monotone in lambda") {
  Rng rng(5);
  const auto x = random_matrix(rng, 25, 10);
  const auto y = random_vector(rng, 25);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 1e5}) {
    const double norm = fit_ridge(x, y, lambda).weights.norm();
    CHECK(norm <= prev + 1e-12);
    prev = norm;
  }
}

TEST_CASE("predict_ridge") {
  RidgeModel zero;
  zero.weights = Eigen::VectorXd::Zero(3);
  zero.intercept = 1.25;
  const auto p = predict_ridge(zero, Eigen::MatrixXd::Ones(4, 3));
  for (int i = 0; i < 4; ++i) CHECK(p(i) == 1.25);
  CHECK_THROWS(predict_ridge(zero, Eigen::MatrixXd::Ones(4, 2)));
}

TEST_CASE("select_lambda returns a grid value and is deterministic") {
  Rng rng(6);
  const auto x = random_matrix(rng, 40, 12);
  Eigen::VectorXd y = x.col(0) * 2 + 0.1 * random_vector(rng, 40);
  const auto& grid = default_lambda_grid();
  const double a = select_lambda(x, y, grid, 5, 3);
  CHECK(std::find(grid.begin(), grid.end(), a) != grid.end());
  CHECK(select_lambda(x, y, grid, 5, 3) == a);
}
