#include "resgene/network.hpp"

#include <algorithm>
#include <cmath>

#include "resgene/rng.hpp"

namespace resgene::net {

ModelConfig ModelConfig::small_input(std::size_t channels, std::size_t side) {
  ModelConfig c;
  c.input_channels = channels;
  c.input_side = side;
  c.stem_stride = 1;
  c.use_maxpool = false;
  return c;
}

ModelConfig ModelConfig::for_input(std::size_t channels, std::size_t side) {
  if (side < 33) return small_input(channels, side);
  ModelConfig c;
  c.input_channels = channels;
  c.input_side = side;
  return c;
}

std::size_t min_side(const ModelConfig& config) {
  const std::size_t reach = 2 * config.padding();
  return config.stem_kernel > reach ? std::max<std::size_t>(1, config.stem_kernel - reach)
                                    : 1;
}

void validate(const ModelConfig& config) {
  if (config.input_channels == 0) throw ConfigError("model: input_channels must be >= 1");
  if (config.stem_kernel == 0) throw ConfigError("model: stem kernel must be >= 1");
  if (config.stem_stride == 0) throw ConfigError("model: stem stride must be >= 1");
  if (config.widths.empty() || config.widths.size() != config.blocks.size()) {
    throw ConfigError("model: widths and blocks must be non-empty and equally long");
  }
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    if (config.widths[i] == 0 || config.blocks[i] == 0) {
      throw ConfigError("model: stage " + std::to_string(i + 1) +
                        " needs a positive width and block count");
    }
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw ConfigError("model: dropout must lie in [0, 1)");
  }
  const std::size_t lo = min_side(config);
  if (config.input_side < lo) {
    throw ConfigError("model: input side " + std::to_string(config.input_side) +
                      " is below the minimum of " + std::to_string(lo) +
                      " for this stem");
  }
}

std::vector<std::size_t> spatial_sizes(const ModelConfig& config) {
  validate(config);
  const std::size_t p = config.padding();
  std::size_t s =
      (config.input_side + 2 * p - config.stem_kernel) / config.stem_stride + 1;
  if (config.use_maxpool) s = (s - 1) / 2 + 1;
  std::vector<std::size_t> sizes{s};
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    if (i > 0) s = (s - 1) / 2 + 1;
    sizes.push_back(s);
  }
  return sizes;
}

std::size_t param_count(const ModelConfig& config) {
  validate(config);
  const std::size_t k = config.stem_kernel;
  std::size_t in = config.widths.front();
  std::size_t total = config.input_channels * in * k * k + 2 * in;
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    const std::size_t out = config.widths[i];
    for (std::size_t b = 0; b < config.blocks[i]; ++b) {
      const bool down = b == 0 && i > 0;
      total += in * out * 9 + 2 * out + out * out * 9 + 2 * out;
      if (down || in != out) total += in * out + 2 * out;
      in = out;
    }
  }
  return total + in + 1;
}

namespace {

template <typename T>
ad::Tensor<T> normal_tensor(ad::Shape shape, double stddev, Rng& rng) {
  std::vector<T> v(ad::numel(shape));
  for (T& x : v) x = static_cast<T>(stddev * rng.normal());
  return ad::Tensor<T>::from(std::move(shape), std::move(v), true);
}

template <typename T>
ConvBn<T> make_conv_bn(std::size_t cin, std::size_t cout, std::size_t k,
                       std::size_t stride, std::size_t padding, Rng& rng) {
  ConvBn<T> layer;
  layer.weight = normal_tensor<T>({cout, cin, k, k},
                                  std::sqrt(2.0 / static_cast<double>(cin * k * k)), rng);
  layer.gamma = ad::Tensor<T>::full({cout}, T(1), true);
  layer.beta = ad::Tensor<T>::zeros({cout}, true);
  layer.bn = ad::BatchNormState<T>(cout);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

template <typename T>
void push_conv_bn(std::vector<std::pair<std::string, ad::Tensor<T>>>& out,
                  const std::string& prefix, const ConvBn<T>& layer) {
  out.emplace_back(prefix + ".weight", layer.weight);
  out.emplace_back(prefix + ".gamma", layer.gamma);
  out.emplace_back(prefix + ".beta", layer.beta);
}

template <typename T>
void push_running(std::vector<std::pair<std::string, ad::Tensor<T>>>& out,
                  const std::string& prefix, const ConvBn<T>& layer) {
  const std::size_t c = layer.bn.running_mean.size();
  out.emplace_back(prefix + ".running_mean",
                   ad::Tensor<T>::from({c}, layer.bn.running_mean));
  out.emplace_back(prefix + ".running_var",
                   ad::Tensor<T>::from({c}, layer.bn.running_var));
}

std::string block_prefix(std::size_t index, const std::vector<std::size_t>& blocks) {
  std::size_t stage = 0, offset = index;
  while (offset >= blocks[stage]) offset -= blocks[stage++];
  return "layer" + std::to_string(stage + 1) + "." + std::to_string(offset);
}

}  // namespace

template <typename T>
ad::Tensor<T> conv_bn(ConvBn<T>& layer, const ad::Tensor<T>& x, ad::Mode mode) {
  const auto y = ad::conv2d(x, layer.weight, ad::Tensor<T>(), layer.stride,
                            layer.padding);
  return ad::batchnorm2d(y, layer.gamma, layer.beta, layer.bn, mode);
}

template <typename T>
ad::Tensor<T> block_forward(BasicBlock<T>& block, const ad::Tensor<T>& x,
                            ad::Mode mode) {
  auto h = ad::relu(conv_bn(block.conv1, x, mode));
  h = conv_bn(block.conv2, h, mode);
  const auto shortcut = block.projection ? conv_bn(*block.projection, x, mode) : x;
  return ad::relu(ad::add(h, shortcut));
}

template <typename T>
Network<T>::Network(const ModelConfig& config) : config_(config) {
  validate(config_);
  Rng rng(config_.seed);
  std::size_t in = config_.widths.front();
  stem_ = make_conv_bn<T>(config_.input_channels, in, config_.stem_kernel,
                          config_.stem_stride, config_.padding(), rng);
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    const std::size_t out = config_.widths[i];
    for (std::size_t b = 0; b < config_.blocks[i]; ++b) {
      const std::size_t stride = (b == 0 && i > 0) ? 2 : 1;
      BasicBlock<T> block;
      block.conv1 = make_conv_bn<T>(in, out, 3, stride, 1, rng);
      block.conv2 = make_conv_bn<T>(out, out, 3, 1, 1, rng);
      if (stride != 1 || in != out) {
        block.projection = make_conv_bn<T>(in, out, 1, stride, 0, rng);
      }
      blocks_.push_back(std::move(block));
      in = out;
    }
  }
  fc_weight_ = normal_tensor<T>({in, 1}, 0.01, rng);
  fc_bias_ = ad::Tensor<T>::zeros({1}, true);
}

template <typename T>
ad::Tensor<T> Network<T>::forward(const ad::Tensor<T>& x, ad::Mode mode,
                                  std::uint64_t dropout_seed) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != config_.input_channels ||
      s[2] != config_.input_side || s[3] != config_.input_side) {
    throw ad::ShapeError("network: expected N x " +
                         std::to_string(config_.input_channels) + " x " +
                         std::to_string(config_.input_side) + " x " +
                         std::to_string(config_.input_side) + " input, got " +
                         ad::shape_string(s));
  }
  auto h = ad::relu(conv_bn(stem_, x, mode));
  if (config_.use_maxpool) h = ad::maxpool2d(h, 3, 2, 1);
  for (auto& block : blocks_) h = block_forward(block, h, mode);
  h = ad::global_avgpool(h);
  h = ad::dropout(h, config_.dropout, mode, dropout_seed);
  return ad::linear(h, fc_weight_, fc_bias_);
}

template <typename T>
std::vector<T> Network<T>::predict(std::span<const T> batch, std::size_t n) {
  const std::size_t per = config_.input_channels * config_.input_side *
                          config_.input_side;
  if (batch.size() != n * per) {
    throw ad::ShapeError("network: predict got " + std::to_string(batch.size()) +
                         " values for " + std::to_string(n) + " samples of " +
                         std::to_string(per));
  }
  ad::NoGradGuard guard;
  constexpr std::size_t kChunk = 64;
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    auto x = ad::Tensor<T>::from(
        {m, config_.input_channels, config_.input_side, config_.input_side},
        std::vector<T>(batch.begin() + static_cast<std::ptrdiff_t>(start * per),
                       batch.begin() + static_cast<std::ptrdiff_t>((start + m) * per)));
    const auto y = forward(x, ad::Mode::kEval);
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, ad::Tensor<T>>> Network<T>::named_parameters()
    const {
  std::vector<std::pair<std::string, ad::Tensor<T>>> out;
  push_conv_bn(out, "stem", stem_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto prefix = block_prefix(i, config_.blocks);
    push_conv_bn(out, prefix + ".conv1", blocks_[i].conv1);
    push_conv_bn(out, prefix + ".conv2", blocks_[i].conv2);
    if (blocks_[i].projection) {
      push_conv_bn(out, prefix + ".projection", *blocks_[i].projection);
    }
  }
  out.emplace_back("fc.weight", fc_weight_);
  out.emplace_back("fc.bias", fc_bias_);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, ad::Tensor<T>>> Network<T>::state_dict() const {
  auto out = named_parameters();
  push_running(out, "stem", stem_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto prefix = block_prefix(i, config_.blocks);
    push_running(out, prefix + ".conv1", blocks_[i].conv1);
    push_running(out, prefix + ".conv2", blocks_[i].conv2);
    if (blocks_[i].projection) {
      push_running(out, prefix + ".projection", *blocks_[i].projection);
    }
  }
  return out;
}

template <typename T>
void Network<T>::load_state_dict(
    const std::vector<std::pair<std::string, ad::Tensor<T>>>& state) {
  std::vector<std::pair<std::string, ConvBn<T>*>> layers{{"stem", &stem_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto prefix = block_prefix(i, config_.blocks);
    layers.emplace_back(prefix + ".conv1", &blocks_[i].conv1);
    layers.emplace_back(prefix + ".conv2", &blocks_[i].conv2);
    if (blocks_[i].projection) {
      layers.emplace_back(prefix + ".projection", &*blocks_[i].projection);
    }
  }
  auto find = [&](const std::string& name) -> const ad::Tensor<T>& {
    for (const auto& [key, t] : state) {
      if (key == name) return t;
    }
    throw ConfigError("checkpoint: missing tensor '" + name + "'");
  };
  auto copy_into = [&](const std::string& name, std::span<T> dst) {
    const auto& src = find(name);
    if (src.numel() != dst.size()) {
      throw ConfigError("checkpoint: tensor '" + name + "' has " +
                        std::to_string(src.numel()) + " values, expected " +
                        std::to_string(dst.size()));
    }
    std::copy(src.data().begin(), src.data().end(), dst.begin());
  };
  for (auto& [name, t] : named_parameters()) copy_into(name, t.mutable_data());
  for (auto& [prefix, layer] : layers) {
    copy_into(prefix + ".running_mean", layer->bn.running_mean);
    copy_into(prefix + ".running_var", layer->bn.running_var);
  }
}

#define RESGENE_INSTANTIATE(T)                                                 \
  template ad::Tensor<T> conv_bn(ConvBn<T>&, const ad::Tensor<T>&, ad::Mode); \
  template ad::Tensor<T> block_forward(BasicBlock<T>&, const ad::Tensor<T>&,  \
                                       ad::Mode);                             \
  template class Network<T>;

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::net
