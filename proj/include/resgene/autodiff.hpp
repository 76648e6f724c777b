#pragma once

// Dense tensors with reverse-mode differentiation.
//
// A Tensor is a shared handle onto a graph node. Ops build new nodes that
// remember their inputs and a closure that pushes the node's gradient back
// into those inputs; backward() runs the closures in reverse topological
// order. Parameters are leaf tensors created with requires_grad = true and
// survive across graphs; intermediate nodes die with the last handle.
//
// Layout is row-major throughout; image batches are N x C x H x W.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace resgene::ad {

using Shape = std::vector<std::size_t>;

enum class Mode { kTrain, kEval };

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Allocates (zeroed) storage on first use.
  std::vector<T>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values,
                     bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  // Value of a one-element tensor.
  T item() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// While alive, ops on this thread record no graph links (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Running statistics for batch normalization; mutated in train mode.
template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

// Cross-correlation. weight is Cout x Cin x k x k; bias (Cout) may be an
// undefined tensor.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormState<T>& state,
                      Mode mode);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

// Pads with -inf, so padded cells never win the max.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t kernel,
                    std::size_t stride, std::size_t padding = 0);

// N x C x H x W -> N x C
template <typename T>
Tensor<T> global_avgpool(const Tensor<T>& input);

// input N x F, weight F x O, bias O -> N x O
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// Inverted dropout: survivors are scaled by 1 / (1 - rate).
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Mode mode,
                  std::uint64_t seed);

// Mean of squared differences against a constant target.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, std::span<const T> target);

// Scalar sum_i weights[i] * input[i]; handy for reducing any tensor to a loss.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& input, std::span<const T> weights);

// Same storage order, new extents.
template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

// Populates grad on every requires_grad tensor reachable from loss.
template <typename T>
void backward(const Tensor<T>& loss);

// Binary parameter checkpoint: per tensor a u32 name length, UTF-8 name,
// u32 rank, u32 extents, then little-endian f64 values.
template <typename T>
void write_checkpoint(std::ostream& out,
                      const std::vector<std::pair<std::string, Tensor<T>>>& named);

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> read_checkpoint(std::istream& in);

}  // namespace resgene::ad
