#include "resgene/cv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "resgene/ridge.hpp"
#include "resgene/stats.hpp"

namespace resgene::cv {

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

CvReport cross_validate(std::span<const double> targets, const FoldTrainer& trainer,
                        const CvOptions& options) {
  const std::size_t n = targets.size();
  const auto folds = stats::kfold_split(n, options.folds, options.seed);
  std::vector<FoldPrediction> results(folds.size());
  std::vector<std::vector<std::size_t>> train_rows(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(n, false);
    for (std::size_t i : folds[f]) held[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) train_rows[f].push_back(i);
    }
  }
  parallel_for(folds.size(), options.jobs, [&](std::size_t f) {
    results[f] = trainer(train_rows[f], folds[f]);
    if (results[f].predictions.size() != folds[f].size()) {
      throw std::runtime_error("cross_validate: trainer returned " +
                               std::to_string(results[f].predictions.size()) +
                               " predictions for " +
                               std::to_string(folds[f].size()) + " test rows");
    }
  });

  CvReport report;
  std::vector<double> all_obs, all_pred;
  double sum = 0;
  std::size_t defined = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<double> obs;
    for (std::size_t i : folds[f]) obs.push_back(targets[i]);
    std::optional<double> r;
    if (obs.size() >= 2) r = stats::try_pcc(obs, results[f].predictions);
    if (r) {
      sum += *r;
      ++defined;
    } else {
      ++report.undefined_folds;
    }
    report.fold_pcc.push_back(r);
    report.loss_traces.push_back(std::move(results[f].loss_trace));
    report.fold_lambda.push_back(results[f].lambda);
    if (results[f].zero_variance_warning) ++report.zero_variance_folds;
    all_obs.insert(all_obs.end(), obs.begin(), obs.end());
    all_pred.insert(all_pred.end(), results[f].predictions.begin(),
                    results[f].predictions.end());
  }
  if (defined > 0) report.mean_pcc = sum / static_cast<double>(defined);
  report.pooled_pcc = stats::try_pcc(all_obs, all_pred);
  return report;
}

std::vector<double> encoded_matrix(const geno::GenotypeDataset& ds,
                                   std::span<const std::size_t> rows) {
  std::vector<double> x(rows.size() * ds.d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto* src = ds.row(rows[r]);
    std::transform(src, src + ds.d, x.begin() + static_cast<std::ptrdiff_t>(r * ds.d),
                   [](std::int8_t v) { return static_cast<double>(v); });
  }
  return x;
}

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd gather(std::span<const double> x, std::size_t d,
                       std::span<const std::size_t> rows) {
  const Eigen::Map<const RowMatrix> all(x.data(),
                                        static_cast<Eigen::Index>(x.size() / d),
                                        static_cast<Eigen::Index>(d));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = all.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<float> gather_inputs(std::span<const float> inputs, std::size_t per,
                                 std::span<const std::size_t> rows) {
  std::vector<float> out(rows.size() * per);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(rows[r] * per), per,
                out.begin() + static_cast<std::ptrdiff_t>(r * per));
  }
  return out;
}

}  // namespace

FoldTrainer ridge_trainer(std::span<const double> x, std::size_t d,
                          std::span<const double> targets, RidgeSpec spec) {
  if (x.size() != targets.size() * d) {
    throw std::invalid_argument("ridge_trainer: matrix and targets disagree");
  }
  if (spec.lambda_grid.empty()) spec.lambda_grid = ridge::default_lambda_grid();
  return [x, d, targets, spec](std::span<const std::size_t> train_rows,
                               std::span<const std::size_t> test_rows) {
    const Eigen::MatrixXd xtr = gather(x, d, train_rows);
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      ytr[static_cast<Eigen::Index>(r)] = targets[train_rows[r]];
    }
    const std::size_t inner =
        std::min<std::size_t>(spec.inner_folds, train_rows.size() / 2);
    const double lambda =
        inner >= 2 ? ridge::select_lambda(xtr, ytr, spec.lambda_grid, inner, spec.seed)
                   : spec.lambda_grid.front();
    const auto model = ridge::fit_ridge(xtr, ytr, lambda);
    const Eigen::VectorXd pred = ridge::predict_ridge(model, gather(x, d, test_rows));
    FoldPrediction out;
    out.predictions.assign(pred.data(), pred.data() + pred.size());
    out.lambda = lambda;
    return out;
  };
}

FoldTrainer network_trainer(std::span<const float> inputs,
                            std::span<const double> targets, NetworkSpec spec) {
  net::validate(spec.model);
  train::validate(spec.train);
  const std::size_t per = spec.model.input_channels * spec.model.input_side *
                          spec.model.input_side;
  if (inputs.size() != targets.size() * per) {
    throw std::invalid_argument("network_trainer: inputs and targets disagree");
  }
  return [inputs, targets, spec, per](std::span<const std::size_t> train_rows,
                                      std::span<const std::size_t> test_rows) {
    net::Network<float> network(spec.model);
    const auto xtr = gather_inputs(inputs, per, train_rows);
    std::vector<double> ytr;
    for (std::size_t i : train_rows) ytr.push_back(targets[i]);
    auto fit = train::train_fold<float>(network, xtr, ytr, spec.train);
    const auto xte = gather_inputs(inputs, per, test_rows);
    FoldPrediction out;
    out.predictions = train::predict<float>(network, fit.scaler, xte, test_rows.size());
    out.loss_trace = std::move(fit.loss_trace);
    out.zero_variance_warning = fit.zero_variance_warning;
    return out;
  };
}

}  // namespace resgene::cv
