#pragma once

// k-fold cross-validation harness and the model adapters that plug into it.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resgene/geno_io.hpp"
#include "resgene/network.hpp"
#include "resgene/tensorize.hpp"
#include "resgene/train.hpp"

namespace resgene::cv {

struct FoldPrediction {
  std::vector<double> predictions;  // aligned with the test rows
  std::vector<double> loss_trace;
  std::optional<double> lambda;     // ridge only
  bool zero_variance_warning = false;
};

// Trains on train_rows and predicts test_rows. Rows index the targets passed
// to cross_validate. Must be safe to call concurrently for different folds.
using FoldTrainer = std::function<FoldPrediction(
    std::span<const std::size_t> train_rows,
    std::span<const std::size_t> test_rows)>;

struct CvReport {
  std::string trait;
  std::string model;
  std::vector<std::optional<double>> fold_pcc;  // nullopt: undefined
  std::optional<double> mean_pcc;               // over defined folds
  std::size_t undefined_folds = 0;
  std::optional<double> pooled_pcc;  // all held-out predictions at once
  std::vector<std::vector<double>> loss_traces;
  std::vector<std::optional<double>> fold_lambda;
  std::size_t zero_variance_folds = 0;
};

struct CvOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Folds come from stats::kfold_split(targets.size(), folds, seed). Folds
// whose predictions or targets are constant get an undefined PCC, are left
// out of the mean and counted.
CvReport cross_validate(std::span<const double> targets, const FoldTrainer& trainer,
                        const CvOptions& options);

// Runs fn(0..count-1) on up to jobs threads.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

// Encoded genotype rows as a dense double matrix, row-major rows x d.
std::vector<double> encoded_matrix(const geno::GenotypeDataset& ds,
                                   std::span<const std::size_t> rows);

struct RidgeSpec {
  std::vector<double> lambda_grid;  // empty: default grid
  std::size_t inner_folds = 5;
  std::uint64_t seed = 0;
};

// x is rows x d row-major.
FoldTrainer ridge_trainer(std::span<const double> x, std::size_t d,
                          std::span<const double> targets, RidgeSpec spec);

struct NetworkSpec {
  net::ModelConfig model;
  train::TrainConfig train;
};

// inputs holds one tensorized sample per target. Each fold builds a fresh
// network from spec.model, so folds are independent.
FoldTrainer network_trainer(std::span<const float> inputs,
                            std::span<const double> targets, NetworkSpec spec);

}  // namespace resgene::cv
