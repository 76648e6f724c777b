#pragma once

// Mini-batch SGD on mean squared error.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "resgene/autodiff.hpp"
#include "resgene/network.hpp"

namespace resgene::train {

class TrainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  double momentum = 0.0;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  bool standardize = true;
  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

// v <- momentum * v + g; w <- w - lr * v
template <typename T>
void sgd_update(std::span<T> weights, std::span<const T> grad,
                std::span<T> velocity, T lr, T momentum);

template <typename T>
class Sgd {
 public:
  Sgd(std::vector<std::pair<std::string, ad::Tensor<T>>> params, double lr,
      double momentum);

  // Applies one update from the accumulated gradients, then clears them.
  void step();
  void zero_grad();

 private:
  std::vector<std::pair<std::string, ad::Tensor<T>>> params_;
  std::vector<std::vector<T>> velocity_;
  T lr_;
  T momentum_;
};

// Affine map between raw targets and the scale the network trains on.
struct TargetScaler {
  double mean = 0.0;
  double scale = 1.0;
  double to_model(double y) const { return (y - mean) / scale; }
  double to_target(double z) const { return mean + scale * z; }
};

struct TrainResult {
  std::vector<double> loss_trace;  // epoch-mean MSE on the training scale
  TargetScaler scaler;
  // Set when the training targets had zero variance and z-scoring was
  // skipped.
  bool zero_variance_warning = false;
};

// Batch order for one epoch: a seeded shuffle cut into batch_size chunks.
// A trailing chunk of one sample joins the previous chunk, since batch
// normalization cannot train on a single sample.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed);

// inputs holds n samples of C*S*S values back to back; targets has n
// entries.
template <typename T>
TrainResult train_fold(net::Network<T>& network, std::span<const T> inputs,
                       std::span<const double> targets,
                       const TrainConfig& config);

// Eval-mode predictions mapped back to the target scale.
template <typename T>
std::vector<double> predict(net::Network<T>& network, const TargetScaler& scaler,
                            std::span<const T> inputs, std::size_t n);

}  // namespace resgene::train
