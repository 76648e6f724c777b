#include "resgene/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "resgene/kernels.hpp"

namespace resgene::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

using kernels::Trans;

thread_local bool g_grad_enabled = true;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

// Creates an op output. Graph links are only recorded when some input
// needs a gradient, so inference graphs hold no references.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<NodePtr<T>> inputs,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                 [](const NodePtr<T>& n) {
                                   return n && n->requires_grad;
                                 });
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

// Output indices o in [lo, hi) whose input index o * stride + tap - padding
// lies inside [0, in).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out, std::size_t in,
                                                std::size_t stride,
                                                std::size_t tap,
                                                std::size_t padding) {
  std::size_t lo = 0;
  if (tap < padding) lo = (padding - tap + stride - 1) / stride;
  // largest o with o * stride + tap - padding <= in - 1
  const std::size_t limit = in - 1 + padding;
  std::size_t hi = tap <= limit ? (limit - tap) / stride + 1 : 0;
  hi = std::min(hi, out);
  return {std::min(lo, hi), hi};
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

template <typename T>
bool wants_grad(const NodePtr<T>& n) {
  return n && n->requires_grad;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const std::size_t n = ad::numel(shape);
  return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values,
                          bool requires_grad) {
  for (std::size_t e : shape) require(e > 0, "tensor extents must be positive");
  require(ad::numel(shape) == values.size(),
          "tensor data length " + std::to_string(values.size()) +
              " does not match shape " + shape_string(shape));
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor<T>(std::move(node));
}

template <typename T>
T Tensor<T>::item() const {
  require(numel() == 1, "item() needs a one-element tensor, got " +
                            shape_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require(stride > 0, "conv2d: stride must be positive");
  require(input.shape().size() == 4, "conv2d: input must be N x C x H x W");
  require(weight.shape().size() == 4 && weight.dim(2) == weight.dim(3),
          "conv2d: weight must be Cout x Cin x k x k");
  const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  require(weight.dim(1) == cin,
          "conv2d: weight expects " + std::to_string(weight.dim(1)) +
              " input channels, input has " + std::to_string(cin));
  require(h + 2 * padding >= k && w + 2 * padding >= k,
          "conv2d: kernel larger than padded input");
  if (bias.defined()) {
    require(bias.numel() == cout, "conv2d: bias length must equal Cout");
  }
  const std::size_t ho = (h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (w + 2 * padding - k) / stride + 1;
  const std::size_t kdim = cin * k * k;
  const std::size_t plane = ho * wo;
  const std::size_t np = n * plane;

  // cols[kdim][n * plane]
  std::vector<T> cols(kdim * np, T(0));
  const T* x = input.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < cin; ++c) {
      const T* xc = x + (b * cin + c) * h * w;
      for (std::size_t ki = 0; ki < k; ++ki) {
        const auto [oh_lo, oh_hi] = valid_range(ho, h, stride, ki, padding);
        for (std::size_t kj = 0; kj < k; ++kj) {
          const auto [ow_lo, ow_hi] = valid_range(wo, w, stride, kj, padding);
          T* row = cols.data() + ((c * k + ki) * k + kj) * np + b * plane;
          for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
            const T* xrow = xc + (oh * stride + ki - padding) * w;
            T* dst = row + oh * wo;
            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
              dst[ow] = xrow[ow * stride + kj - padding];
            }
          }
        }
      }
    }
  }

  std::vector<T> tmp(cout * np);
  kernels::gemm<T>(Trans::kNo, Trans::kNo, cout, np, kdim, T(1),
                   weight.data().data(), kdim, cols.data(), np, T(0),
                   tmp.data(), np);
  std::vector<T> out(n * cout * plane);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      const T bv = bias.defined() ? bias.data()[co] : T(0);
      const T* src = tmp.data() + co * np + b * plane;
      T* dst = out.data() + (b * cout + co) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + bv;
    }
  }

  std::vector<NodePtr<T>> inputs{input.node_ptr(), weight.node_ptr(),
                                 bias.node_ptr()};
  // cols is only needed for the weight gradient.
  if (!g_grad_enabled || !weight.requires_grad()) cols.clear();
  auto backward_fn = [=, cols = std::move(cols)](Node<T>& self) {
    const auto& xin = self.inputs[0];
    const auto& wt = self.inputs[1];
    const auto& bs = self.inputs[2];
    std::vector<T> dtmp(cout * np);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t co = 0; co < cout; ++co) {
        const T* src = self.grad.data() + (b * cout + co) * plane;
        std::copy(src, src + plane, dtmp.data() + co * np + b * plane);
      }
    }
    if (wants_grad(wt)) {
      kernels::gemm<T>(Trans::kNo, Trans::kYes, cout, kdim, np, T(1),
                       dtmp.data(), np, cols.data(), np, T(1),
                       wt->grad_buffer().data(), kdim);
    }
    if (wants_grad(bs)) {
      auto& db = bs->grad_buffer();
      for (std::size_t co = 0; co < cout; ++co) {
        const T* row = dtmp.data() + co * np;
        T acc = 0;
        for (std::size_t i = 0; i < np; ++i) acc += row[i];
        db[co] += acc;
      }
    }
    if (wants_grad(xin)) {
      std::vector<T> dcols(kdim * np);
      kernels::gemm<T>(Trans::kYes, Trans::kNo, kdim, np, cout, T(1),
                       wt->value.data(), kdim, dtmp.data(), np, T(0),
                       dcols.data(), np);
      auto& dx = xin->grad_buffer();
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < cin; ++c) {
          T* dxc = dx.data() + (b * cin + c) * h * w;
          for (std::size_t ki = 0; ki < k; ++ki) {
            const auto [oh_lo, oh_hi] = valid_range(ho, h, stride, ki, padding);
            for (std::size_t kj = 0; kj < k; ++kj) {
              const auto [ow_lo, ow_hi] = valid_range(wo, w, stride, kj, padding);
              const T* row =
                  dcols.data() + ((c * k + ki) * k + kj) * np + b * plane;
              for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                T* dxrow = dxc + (oh * stride + ki - padding) * w;
                const T* src = row + oh * wo;
                for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                  dxrow[ow * stride + kj - padding] += src[ow];
                }
              }
            }
          }
        }
      }
    }
  };
  return make_result<T>({n, cout, ho, wo}, std::move(out), std::move(inputs),
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormState<T>& state,
                      Mode mode) {
  require(input.shape().size() == 4,
          "batchnorm2d: input must be N x C x H x W");
  const std::size_t n = input.dim(0), c = input.dim(1),
                    plane = input.dim(2) * input.dim(3);
  require(gamma.numel() == c && beta.numel() == c,
          "batchnorm2d: affine parameters must have one entry per channel");
  require(state.running_mean.size() == c && state.running_var.size() == c,
          "batchnorm2d: running statistics must have one entry per channel");
  if (mode == Mode::kTrain && n < 2) {
    throw std::invalid_argument(
        "batchnorm2d: train mode needs a batch of at least 2 samples");
  }
  const std::size_t m = n * plane;
  const T* x = input.data().data();
  const T* g = gamma.data().data();
  const T* bt = beta.data().data();
  std::vector<T> xhat(input.numel());
  std::vector<T> inv_std(c);
  std::vector<T> out(input.numel());

  for (std::size_t ch = 0; ch < c; ++ch) {
    T mean, var;
    if (mode == Mode::kTrain) {
      double s = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* src = x + (b * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) s += src[p];
      }
      const double mu = s / static_cast<double>(m);
      double ss = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* src = x + (b * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          const double d = src[p] - mu;
          ss += d * d;
        }
      }
      mean = static_cast<T>(mu);
      var = static_cast<T>(ss / static_cast<double>(m));
      const T unbiased =
          m > 1 ? static_cast<T>(ss / static_cast<double>(m - 1)) : var;
      state.running_mean[ch] = (T(1) - state.momentum) *
                                   state.running_mean[ch] +
                               state.momentum * mean;
      state.running_var[ch] = (T(1) - state.momentum) * state.running_var[ch] +
                              state.momentum * unbiased;
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const T is = T(1) / std::sqrt(var + state.epsilon);
    inv_std[ch] = is;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const T xh = (x[off + p] - mean) * is;
        xhat[off + p] = xh;
        out[off + p] = g[ch] * xh + bt[ch];
      }
    }
  }

  std::vector<NodePtr<T>> inputs{input.node_ptr(), gamma.node_ptr(),
                                 beta.node_ptr()};
  auto backward_fn = [=, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](Node<T>& self) {
    const auto& xin = self.inputs[0];
    const auto& gm = self.inputs[1];
    const auto& bb = self.inputs[2];
    const T* dy = self.grad.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          sum_dy += dy[off + p];
          sum_dy_xhat += dy[off + p] * xhat[off + p];
        }
      }
      if (wants_grad(gm)) gm->grad_buffer()[ch] += sum_dy_xhat;
      if (wants_grad(bb)) bb->grad_buffer()[ch] += sum_dy;
      if (!wants_grad(xin)) continue;
      auto& dx = xin->grad_buffer();
      const T gval = gm->value[ch];
      if (mode == Mode::kTrain) {
        const T scale = gval * inv_std[ch] / static_cast<T>(m);
        const T mt = static_cast<T>(m);
        for (std::size_t b = 0; b < n; ++b) {
          const std::size_t off = (b * c + ch) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            dx[off + p] += scale * (mt * dy[off + p] - sum_dy -
                                    xhat[off + p] * sum_dy_xhat);
          }
        }
      } else {
        const T scale = gval * inv_std[ch];
        for (std::size_t b = 0; b < n; ++b) {
          const std::size_t off = (b * c + ch) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            dx[off + p] += scale * dy[off + p];
          }
        }
      }
    }
  };
  return make_result<T>(input.shape(), std::move(out), std::move(inputs),
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  std::vector<T> out(input.data().begin(), input.data().end());
  for (T& v : out) v = v > T(0) ? v : T(0);
  auto backward_fn = [](Node<T>& self) {
    const auto& xin = self.inputs[0];
    auto& dx = xin->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += xin->value[i] > T(0) ? self.grad[i] : T(0);
    }
  };
  return make_result<T>(input.shape(), std::move(out), {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t kernel,
                    std::size_t stride, std::size_t padding) {
  require(input.shape().size() == 4, "maxpool2d: input must be N x C x H x W");
  require(kernel > 0 && stride > 0,
          "maxpool2d: kernel and stride must be positive");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  require(kernel <= h + 2 * padding && kernel <= w + 2 * padding,
          "maxpool2d: window " + std::to_string(kernel) +
              " larger than padded input " + std::to_string(h) + "x" +
              std::to_string(w));
  require(padding * 2 <= kernel, "maxpool2d: padding at most half the window");
  const std::size_t ho = (h + 2 * padding - kernel) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kernel) / stride + 1;
  std::vector<T> out(n * c * ho * wo);
  std::vector<std::size_t> argmax(out.size());
  const T* x = input.data().data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* xp = x + plane * h * w;
    for (std::size_t oh = 0; oh < ho; ++oh) {
      for (std::size_t ow = 0; ow < wo; ++ow) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t ki = 0; ki < kernel; ++ki) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + ki) -
                                    static_cast<std::ptrdiff_t>(padding);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kj = 0; kj < kernel; ++kj) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * stride + kj) -
                static_cast<std::ptrdiff_t>(padding);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx = ih * w + iw;
            if (!found || xp[idx] > best) {
              best = xp[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        const std::size_t o = (plane * ho + oh) * wo + ow;
        out[o] = best;
        argmax[o] = plane * h * w + best_idx;
      }
    }
  }
  auto backward_fn = [argmax = std::move(argmax)](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (std::size_t o = 0; o < argmax.size(); ++o) {
      dx[argmax[o]] += self.grad[o];
    }
  };
  return make_result<T>({n, c, ho, wo}, std::move(out), {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> global_avgpool(const Tensor<T>& input) {
  require(input.shape().size() == 4,
          "global_avgpool: input must be N x C x H x W");
  const std::size_t n = input.dim(0), c = input.dim(1),
                    plane = input.dim(2) * input.dim(3);
  std::vector<T> out(n * c);
  const T* x = input.data().data();
  for (std::size_t i = 0; i < n * c; ++i) {
    T acc = 0;
    for (std::size_t p = 0; p < plane; ++p) acc += x[i * plane + p];
    out[i] = acc / static_cast<T>(plane);
  }
  auto backward_fn = [plane](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    const T inv = T(1) / static_cast<T>(plane);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T g = self.grad[i] * inv;
      for (std::size_t p = 0; p < plane; ++p) dx[i * plane + p] += g;
    }
  };
  return make_result<T>({n, c}, std::move(out), {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias) {
  require(input.shape().size() == 2, "linear: input must be N x F");
  require(weight.shape().size() == 2 && weight.dim(0) == input.dim(1),
          "linear: weight must be F x O with F = " +
              std::to_string(input.dim(1)));
  const std::size_t n = input.dim(0), f = input.dim(1), o = weight.dim(1);
  if (bias.defined()) require(bias.numel() == o, "linear: bias must have O entries");
  std::vector<T> out(n * o);
  kernels::gemm<T>(Trans::kNo, Trans::kNo, n, o, f, T(1), input.data().data(),
                   f, weight.data().data(), o, T(0), out.data(), o);
  if (bias.defined()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < o; ++j) out[i * o + j] += bias.data()[j];
    }
  }
  auto backward_fn = [n, f, o](Node<T>& self) {
    const auto& xin = self.inputs[0];
    const auto& wt = self.inputs[1];
    const auto& bs = self.inputs[2];
    const T* g = self.grad.data();
    if (wants_grad(xin)) {
      kernels::gemm<T>(Trans::kNo, Trans::kYes, n, f, o, T(1), g, o,
                       wt->value.data(), o, T(1),
                       xin->grad_buffer().data(), f);
    }
    if (wants_grad(wt)) {
      kernels::gemm<T>(Trans::kYes, Trans::kNo, f, o, n, T(1),
                       xin->value.data(), f, g, o, T(1),
                       wt->grad_buffer().data(), o);
    }
    if (wants_grad(bs)) {
      auto& db = bs->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < o; ++j) db[j] += g[i * o + j];
      }
    }
  };
  return make_result<T>({n, o}, std::move(out),
                        {input.node_ptr(), weight.node_ptr(), bias.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " +
                                      shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
  std::vector<T> out(a.data().begin(), a.data().end());
  kernels::axpy<T>(out.size(), T(1), b.data().data(), out.data());
  auto backward_fn = [](Node<T>& self) {
    for (const auto& in : self.inputs) {
      if (wants_grad(in)) {
        kernels::axpy<T>(self.grad.size(), T(1), self.grad.data(),
                         in->grad_buffer().data());
      }
    }
  };
  return make_result<T>(a.shape(), std::move(out),
                        {a.node_ptr(), b.node_ptr()}, std::move(backward_fn));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Mode mode,
                  std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  }
  if (mode == Mode::kEval || rate == 0.0) return input;
  std::mt19937_64 rng(seed);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(input.numel());
  for (T& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? T(0) : scale;
  }
  std::vector<T> out(input.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input.data()[i] * mask[i];
  auto backward_fn = [mask = std::move(mask)](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * mask[i];
  };
  return make_result<T>(input.shape(), std::move(out), {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, std::span<const T> target) {
  if (target.empty()) throw std::invalid_argument("mse_loss: empty input");
  require(pred.numel() == target.size(),
          "mse_loss: prediction has " + std::to_string(pred.numel()) +
              " entries, target has " + std::to_string(target.size()));
  const std::size_t n = target.size();
  std::vector<T> diff(n);
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = pred.data()[i] - target[i];
    acc += diff[i] * diff[i];
  }
  auto backward_fn = [diff = std::move(diff)](Node<T>& self) {
    auto& dp = self.inputs[0]->grad_buffer();
    const T g = self.grad[0] * T(2) / static_cast<T>(diff.size());
    for (std::size_t i = 0; i < diff.size(); ++i) dp[i] += g * diff[i];
  };
  return make_result<T>({1}, {acc / static_cast<T>(n)}, {pred.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& input, std::span<const T> weights) {
  require(weights.size() == input.numel(),
          "weighted_sum: weight count must equal element count");
  const T acc =
      kernels::dot<T>(weights.size(), input.data().data(), weights.data());
  std::vector<T> wcopy(weights.begin(), weights.end());
  auto backward_fn = [wcopy = std::move(wcopy)](Node<T>& self) {
    kernels::axpy<T>(wcopy.size(), self.grad[0], wcopy.data(),
                     self.inputs[0]->grad_buffer().data());
  };
  return make_result<T>({1}, {acc}, {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
  require(ad::numel(shape) == input.numel(),
          "reshape: " + shape_string(input.shape()) + " -> " +
              shape_string(shape) + " changes element count");
  std::vector<T> out(input.data().begin(), input.data().end());
  auto backward_fn = [](Node<T>& self) {
    kernels::axpy<T>(self.grad.size(), T(1), self.grad.data(),
                     self.inputs[0]->grad_buffer().data());
  };
  return make_result<T>(std::move(shape), std::move(out), {input.node_ptr()},
                        std::move(backward_fn));
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  }
  Node<T>* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order with inputs first.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child && child->requires_grad && child->backward &&
          visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward) {
      node->grad_buffer();
      node->backward(*node);
    }
  }
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("checkpoint: truncated input");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error("checkpoint: truncated input");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

template <typename T>
void write_checkpoint(
    std::ostream& out,
    const std::vector<std::pair<std::string, Tensor<T>>>& named) {
  for (const auto& [name, tensor] : named) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (std::size_t e : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (T v : tensor.data()) put_f64(out, static_cast<double>(v));
  }
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> read_checkpoint(
    std::istream& in) {
  std::vector<std::pair<std::string, Tensor<T>>> named;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t len = get_u32(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) {
      throw std::runtime_error("checkpoint: truncated tensor name");
    }
    const std::uint32_t rank = get_u32(in);
    Shape shape(rank);
    for (auto& e : shape) e = get_u32(in);
    std::vector<T> values(ad::numel(shape));
    for (T& v : values) v = static_cast<T>(get_f64(in));
    named.emplace_back(std::move(name),
                       Tensor<T>::from(std::move(shape), std::move(values)));
  }
  return named;
}

#define RESGENE_INSTANTIATE(T)                                                 \
  template class Tensor<T>;                                                    \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, std::size_t, std::size_t);       \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&,           \
                                 const Tensor<T>&, BatchNormState<T>&, Mode);  \
  template Tensor<T> relu(const Tensor<T>&);                                   \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t,     \
                               std::size_t);                                   \
  template Tensor<T> global_avgpool(const Tensor<T>&);                         \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, std::uint64_t);   \
  template Tensor<T> mse_loss(const Tensor<T>&, std::span<const T>);           \
  template Tensor<T> weighted_sum(const Tensor<T>&, std::span<const T>);       \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                         \
  template void backward(const Tensor<T>&);                                    \
  template void write_checkpoint(                                              \
      std::ostream&, const std::vector<std::pair<std::string, Tensor<T>>>&);   \
  template std::vector<std::pair<std::string, Tensor<T>>> read_checkpoint<T>(  \
      std::istream&);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::ad
