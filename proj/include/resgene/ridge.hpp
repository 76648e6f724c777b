#pragma once

// Closed-form ridge regression on the encoded SNP matrix.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace resgene::ridge {

class RidgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RidgeModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;
};

struct RidgeOptions {
  // Center X and y, recover the intercept from the means.
  bool fit_intercept = true;
};

// w = (Xc'Xc + lambda I)^-1 Xc'yc. Uses the n x n dual system when d > n and
// lambda > 0; lambda = 0 goes through a rank-revealing QR and throws
// RidgeError when the system is singular.
RidgeModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double lambda, const RidgeOptions& opts = {});

Eigen::VectorXd predict_ridge(const RidgeModel& model,
                              const Eigen::MatrixXd& x);

inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{0.1, 1.0, 10.0, 100.0, 1000.0};
  return grid;
}

// Picks lambda by mean PCC of an inner k-fold split of the training rows;
// the first grid entry wins ties.
double select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::span<const double> grid, std::size_t inner_folds,
                     std::uint64_t seed);

}  // namespace resgene::ridge
