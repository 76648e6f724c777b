#pragma once

// ResNet-18 backbone with a single-output regression head.
//
// stem:   conv(C -> w0, k x k, stride, pad) + BN + relu [+ maxpool 3/2/1]
// stages: blocks[i] basic blocks of width widths[i]; the first block of every
//         stage after the first halves the resolution and projects the
//         shortcut with a 1 x 1 conv + BN
// head:   global average pool, dropout, linear(widths.back() -> 1)

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "resgene/autodiff.hpp"

namespace resgene::net {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  std::size_t input_channels = 1;
  std::size_t input_side = 64;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 2;
  // Defaults to stem_kernel / 2 when unset.
  std::optional<std::size_t> stem_padding;
  bool use_maxpool = true;
  std::vector<std::size_t> widths{64, 128, 256, 512};
  std::vector<std::size_t> blocks{2, 2, 2, 2};
  double dropout = 0.0;
  std::uint64_t seed = 0;

  std::size_t padding() const { return stem_padding.value_or(stem_kernel / 2); }
  bool operator==(const ModelConfig&) const = default;

  // Stem stride 1 and no maxpool, for sides below 33.
  static ModelConfig small_input(std::size_t channels, std::size_t side);
  // small_input() when side < 33, the standard stem otherwise.
  static ModelConfig for_input(std::size_t channels, std::size_t side);
};

// Throws ConfigError on empty/mismatched stage lists, zero extents, a
// dropout rate outside [0, 1) or an input side too small for the stem.
void validate(const ModelConfig& config);

// Smallest input side whose stem and pooling windows all fit.
std::size_t min_side(const ModelConfig& config);

// Spatial side after the stem, after each stage.
std::vector<std::size_t> spatial_sizes(const ModelConfig& config);

std::size_t param_count(const ModelConfig& config);

template <typename T>
struct ConvBn {
  ad::Tensor<T> weight;  // Cout x Cin x k x k, no bias
  ad::Tensor<T> gamma;
  ad::Tensor<T> beta;
  ad::BatchNormState<T> bn;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

template <typename T>
struct BasicBlock {
  ConvBn<T> conv1;
  ConvBn<T> conv2;
  std::optional<ConvBn<T>> projection;
};

template <typename T>
ad::Tensor<T> conv_bn(ConvBn<T>& layer, const ad::Tensor<T>& x, ad::Mode mode);

// relu(conv2(relu(conv1(x))) + shortcut(x))
template <typename T>
ad::Tensor<T> block_forward(BasicBlock<T>& block, const ad::Tensor<T>& x,
                            ad::Mode mode);

template <typename T>
class Network {
 public:
  explicit Network(const ModelConfig& config);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const ModelConfig& config() const { return config_; }

  // x is N x C x S x S; returns N x 1. dropout_seed feeds train-mode dropout.
  ad::Tensor<T> forward(const ad::Tensor<T>& x, ad::Mode mode,
                        std::uint64_t dropout_seed = 0);

  // Eval-mode predictions for n samples stored back to back.
  std::vector<T> predict(std::span<const T> batch, std::size_t n);

  // Trainable tensors in a fixed order.
  std::vector<std::pair<std::string, ad::Tensor<T>>> named_parameters() const;
  // Parameters plus batch-norm running statistics, for checkpoints.
  std::vector<std::pair<std::string, ad::Tensor<T>>> state_dict() const;
  // Copies values from a checkpoint with matching names and shapes.
  void load_state_dict(
      const std::vector<std::pair<std::string, ad::Tensor<T>>>& state);

  std::vector<BasicBlock<T>>& blocks() { return blocks_; }

 private:
  ModelConfig config_;
  ConvBn<T> stem_;
  std::vector<BasicBlock<T>> blocks_;
  ad::Tensor<T> fc_weight_;  // F x 1
  ad::Tensor<T> fc_bias_;
};

}  // namespace resgene::net
