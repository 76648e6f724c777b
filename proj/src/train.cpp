#include "resgene/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resgene/kernels.hpp"
#include "resgene/rng.hpp"

namespace resgene::train {

void validate(const TrainConfig& config) {
  if (config.batch_size < 1) throw TrainError("train: batch size must be >= 1");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw TrainError("train: learning rate must be finite and non-negative");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw TrainError("train: momentum must lie in [0, 1)");
  }
  if (config.epochs < 1) throw TrainError("train: epochs must be >= 1");
}

template <typename T>
void sgd_update(std::span<T> weights, std::span<const T> grad,
                std::span<T> velocity, T lr, T momentum) {
  if (weights.size() != grad.size() || weights.size() != velocity.size()) {
    throw TrainError("sgd: weight, gradient and velocity sizes differ");
  }
  const std::size_t n = weights.size();
  if (momentum == T(0)) {
    std::copy(grad.begin(), grad.end(), velocity.begin());
  } else {
    for (T& v : velocity) v *= momentum;
    kernels::axpy<T>(n, T(1), grad.data(), velocity.data());
  }
  kernels::axpy<T>(n, -lr, velocity.data(), weights.data());
}

template <typename T>
Sgd<T>::Sgd(std::vector<std::pair<std::string, ad::Tensor<T>>> params,
            double lr, double momentum)
    : params_(std::move(params)),
      lr_(static_cast<T>(lr)),
      momentum_(static_cast<T>(momentum)) {
  for (const auto& [name, t] : params_) velocity_.emplace_back(t.numel(), T(0));
}

template <typename T>
void Sgd<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& t = params_[i].second;
    if (!t.has_grad()) continue;
    sgd_update<T>(t.mutable_data(), t.grad(), velocity_[i], lr_, momentum_);
  }
  zero_grad();
}

template <typename T>
void Sgd<T>::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

template <typename T>
TrainResult train_fold(net::Network<T>& network, std::span<const T> inputs,
                       std::span<const double> targets,
                       const TrainConfig& config) {
  validate(config);
  const std::size_t n = targets.size();
  if (n < 2) throw TrainError("train: need at least two training rows");
  const auto& mc = network.config();
  const std::size_t per = mc.input_channels * mc.input_side * mc.input_side;
  if (inputs.size() != n * per) {
    throw TrainError("train: inputs hold " + std::to_string(inputs.size()) +
                     " values, expected " + std::to_string(n * per));
  }

  TrainResult result;
  if (config.standardize) {
    const double mean =
        std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double y : targets) ss += (y - mean) * (y - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd > 0.0) {
      result.scaler = {mean, sd};
    } else {
      result.zero_variance_warning = true;
    }
  }
  std::vector<T> scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = static_cast<T>(result.scaler.to_model(targets[i]));
  }

  Sgd<T> opt(network.named_parameters(), config.learning_rate, config.momentum);
  opt.zero_grad();
  std::uint64_t step = 0;
  std::vector<T> xb, yb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches =
        epoch_batches(n, config.batch_size, mix_seed(config.seed, epoch));
    double total = 0;
    for (const auto& batch : batches) {
      const std::size_t m = batch.size();
      xb.resize(m * per);
      yb.resize(m);
      for (std::size_t r = 0; r < m; ++r) {
        std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(batch[r] * per),
                    per, xb.begin() + static_cast<std::ptrdiff_t>(r * per));
        yb[r] = scaled[batch[r]];
      }
      const auto x = ad::Tensor<T>::from(
          {m, mc.input_channels, mc.input_side, mc.input_side}, xb);
      const auto pred = network.forward(
          x, ad::Mode::kTrain, mix_seed(config.seed ^ 0xD50F5EEDULL, step++));
      const auto loss = ad::mse_loss(ad::reshape(pred, {m}),
                                     std::span<const T>(yb));
      ad::backward(loss);
      opt.step();
      total += static_cast<double>(loss.item()) * static_cast<double>(m);
    }
    result.loss_trace.push_back(total / static_cast<double>(n));
  }
  return result;
}

template <typename T>
std::vector<double> predict(net::Network<T>& network, const TargetScaler& scaler,
                            std::span<const T> inputs, std::size_t n) {
  const auto raw = network.predict(inputs, n);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = scaler.to_target(static_cast<double>(raw[i]));
  }
  return out;
}

#define RESGENE_INSTANTIATE(T)                                                  \
  template void sgd_update<T>(std::span<T>, std::span<const T>, std::span<T>,  \
                              T, T);                                            \
  template class Sgd<T>;                                                        \
  template TrainResult train_fold<T>(net::Network<T>&, std::span<const T>,     \
                                     std::span<const double>,                   \
                                     const TrainConfig&);                       \
  template std::vector<double> predict<T>(net::Network<T>&,                    \
                                          const TargetScaler&,                  \
                                          std::span<const T>, std::size_t);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::train
