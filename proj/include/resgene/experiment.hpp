#pragma once

// End-to-end runs: dataset + trait + model settings -> cross-validated
// RunResult, and grid tuning over batch size, learning rate, dropout and
// channel count.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "resgene/cv.hpp"
#include "resgene/geno_io.hpp"
#include "resgene/run_result.hpp"

namespace resgene::experiment {

// Flag combinations that can never run (e.g. resgene-t without channels).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { kResGene2d, kResGeneT, kRidge };

ModelKind parse_model(const std::string& name);
std::string model_name(ModelKind kind);

struct ExperimentConfig {
  ModelKind kind = ModelKind::kResGene2d;
  std::string dataset;
  std::string trait;
  std::optional<std::size_t> channels;  // required for resgene-t
  std::size_t stem_kernel = 3;
  // Empty keeps the ResNet-18 stage layout.
  std::vector<std::size_t> widths;
  std::vector<std::size_t> blocks;
  double dropout = 0.0;
  train::TrainConfig train;
  run::RidgeConfig ridge{{}, 5};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  // Record 0 instead of the measured wall-clock time.
  bool reproducible = false;
};

void validate(const ExperimentConfig& config);

// Layout, network config and tensorized inputs for one trait.
struct Prepared {
  geno::TraitView view;
  tensorize::SnpLayout layout;
  net::ModelConfig model;
  std::vector<float> inputs;  // empty for ridge
  std::vector<double> x;      // encoded matrix, ridge only
};

Prepared prepare(const geno::GenotypeDataset& ds, const ExperimentConfig& config);

// The trainer refers into prepared, which must outlive it.
cv::FoldTrainer make_trainer(const Prepared& prepared, const ExperimentConfig& config,
                             std::span<const double> targets);

run::RunResult run_experiment(const geno::GenotypeDataset& ds,
                              const ExperimentConfig& config);

struct GridSpec {
  std::vector<std::size_t> batch_sizes{32, 64};
  std::vector<double> learning_rates{0.01, 0.001};
  std::vector<double> dropouts{0.1, 0.3};
  std::vector<std::size_t> channels;  // empty for models without channels

  // Channels {20, 50} for resgene-t, none otherwise.
  static GridSpec defaults(ModelKind kind);
};

struct GridPoint {
  std::size_t batch_size = 0;
  double learning_rate = 0;
  double dropout = 0;
  std::optional<std::size_t> channels;

  auto operator<=>(const GridPoint&) const = default;
};

// Cartesian product in ascending (BS, LR, D, C) order. Throws UsageError for
// an empty axis.
std::vector<GridPoint> enumerate(const GridSpec& grid);

// Index of the highest score; ties go to the earliest point in (BS, LR, D, C)
// order. Undefined scores never win unless all are undefined.
std::size_t select_best(const std::vector<GridPoint>& points,
                        const std::vector<std::optional<double>>& scores);

ExperimentConfig apply(const ExperimentConfig& base, const GridPoint& point);

struct TuneResult {
  std::vector<GridPoint> points;
  std::vector<run::RunResult> runs;  // one per point
  std::size_t best = 0;
  // Nested mode: the outer-fold result and the point chosen in each fold.
  std::optional<run::RunResult> nested;
  std::vector<GridPoint> nested_choices;
};

// Default tuning scores every point by full k-fold mean PCC and picks
// the best. nested additionally reruns selection inside each outer fold on
// its training rows only.
TuneResult tune(const geno::GenotypeDataset& ds, const ExperimentConfig& base,
                const GridSpec& grid, bool nested);

}  // namespace resgene::experiment
