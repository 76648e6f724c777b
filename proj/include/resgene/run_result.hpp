#pragma once

// The JSON record written by every training run.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "resgene/network.hpp"
#include "resgene/tensorize.hpp"
#include "resgene/train.hpp"

namespace resgene::run {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolkitVersion = "0.1.0";

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RidgeConfig {
  std::vector<double> lambda_grid;
  std::size_t inner_folds = 5;
  bool operator==(const RidgeConfig&) const = default;
};

struct RunResult {
  std::string model;  // resgene-2d, resgene-t or ridge
  std::string dataset;
  std::string trait;
  std::optional<net::ModelConfig> model_config;
  std::optional<train::TrainConfig> train_config;
  std::optional<tensorize::SnpLayout> layout;
  std::optional<RidgeConfig> ridge_config;
  std::size_t folds = 0;
  std::vector<std::optional<double>> fold_pcc;
  std::optional<double> mean_pcc;
  std::size_t undefined_folds = 0;
  std::optional<double> pooled_pcc;
  std::vector<std::vector<double>> loss_traces;
  std::vector<std::optional<double>> fold_lambda;
  std::size_t zero_variance_folds = 0;
  double wall_seconds = 0;
  std::uint64_t seed = 0;
  std::string version{kToolkitVersion};

  bool operator==(const RunResult&) const = default;
};

nlohmann::json to_json(const RunResult& result);
// Throws SchemaError on a missing field or an unknown schema version.
RunResult from_json(const nlohmann::json& j);

std::string serialize(const RunResult& result);
RunResult parse(std::string_view text);

}  // namespace resgene::run
