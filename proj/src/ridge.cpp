#include "resgene/ridge.hpp"

#include <limits>
#include <string>

#include "resgene/stats.hpp"

namespace resgene::ridge {

RidgeModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double lambda, const RidgeOptions& opts) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n < 1) throw RidgeError("fit_ridge: no training rows");
  if (y.size() != n) throw RidgeError("fit_ridge: X and y row counts differ");
  if (lambda < 0.0) throw RidgeError("fit_ridge: lambda must be >= 0");

  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(d);
  double y_mean = 0.0;
  if (opts.fit_intercept) {
    x_mean = x.colwise().mean();
    y_mean = y.mean();
  }
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  RidgeModel model;
  model.lambda = lambda;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    if (qr.rank() < d) {
      throw RidgeError("fit_ridge: singular system at lambda = 0 (rank " +
                       std::to_string(qr.rank()) + " < d = " +
                       std::to_string(d) + ")");
    }
    model.weights = qr.solve(yc);
  } else if (d <= n) {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw RidgeError("fit_ridge: Cholesky factorization failed");
    }
    model.weights = llt.solve(xc.transpose() * yc);
  } else {
    Eigen::MatrixXd kernel = xc * xc.transpose();
    kernel.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(kernel);
    if (llt.info() != Eigen::Success) {
      throw RidgeError("fit_ridge: Cholesky factorization failed");
    }
    model.weights = xc.transpose() * llt.solve(yc);
  }
  model.intercept = y_mean - x_mean.dot(model.weights);
  return model;
}

Eigen::VectorXd predict_ridge(const RidgeModel& model,
                              const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size()) {
    throw RidgeError("predict_ridge: X has " + std::to_string(x.cols()) +
                     " columns, model expects " +
                     std::to_string(model.weights.size()));
  }
  return (x * model.weights).array() + model.intercept;
}

double select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::span<const double> grid, std::size_t inner_folds,
                     std::uint64_t seed) {
  if (grid.empty()) throw RidgeError("select_lambda: empty grid");
  if (grid.size() == 1) return grid.front();
  const auto folds =
      stats::kfold_split(static_cast<std::size_t>(x.rows()), inner_folds, seed);
  double best_lambda = grid.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& test : folds) {
      std::vector<bool> held(static_cast<std::size_t>(x.rows()), false);
      for (std::size_t i : test) held[i] = true;
      std::vector<Eigen::Index> train_rows;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!held[static_cast<std::size_t>(i)]) train_rows.push_back(i);
      }
      const Eigen::MatrixXd xtr = x(train_rows, Eigen::all);
      const Eigen::VectorXd ytr = y(train_rows);
      std::vector<Eigen::Index> test_rows(test.begin(), test.end());
      const Eigen::VectorXd pred =
          predict_ridge(fit_ridge(xtr, ytr, lambda), x(test_rows, Eigen::all));
      const Eigen::VectorXd obs = y(test_rows);
      if (auto r = stats::try_pcc({obs.data(), static_cast<std::size_t>(obs.size())},
                                  {pred.data(), static_cast<std::size_t>(pred.size())})) {
        total += *r;
        ++counted;
      }
    }
    const double score = counted ? total / static_cast<double>(counted)
                                 : -std::numeric_limits<double>::infinity();
    if (score > best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace resgene::ridge
