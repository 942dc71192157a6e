#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bipath/tensor.hpp"

namespace bipath {

/// A trainable tensor with its accumulated gradient.
template <class T>
struct Param {
  Param(std::string param_name, BasicTensor<T> initial)
      : name(std::move(param_name)), value(std::move(initial)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }

  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
};

template <class T>
class Tape;

/// Handle to a value recorded on a Tape.
template <class T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const BasicTensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient after Tape::backward; zeros when the node was not reached.
  BasicTensor<T> grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of executed ops. Backward walks the record in reverse and
/// accumulates into every input that requires a gradient, then flushes leaf
/// gradients into their Params.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const BasicTensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(BasicTensor<T> value);
  Var<T> variable(BasicTensor<T> value);
  Var<T> param(Param<T>& p);

  /// Appends an op result. Throws NumericError when `value` is not finite.
  Var<T> record(BasicTensor<T> value, std::span<const Var<T>> inputs, BackwardFn backward);
  Var<T> record(BasicTensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()), std::move(backward));
  }

  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(const Var<T>& v) const { return nodes_.at(v.id()).requires_grad; }
  BasicTensor<T> grad(std::size_t id) const;

  /// Zero-initialised gradient buffer of `v`, created on first use.
  BasicTensor<T>& grad_buffer(const Var<T>& v);

  void backward(const Var<T>& root);
  void backward(const Var<T>& root, const BasicTensor<T>& seed);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Param<T>* param = nullptr;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;  // stable addresses: value() references survive later records
  bool backward_done_ = false;
};

template <class T>
const BasicTensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <class T>
BasicTensor<T> Var<T>::grad() const {
  return tape_->grad(id_);
}

struct ConvSpec {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// Output extent of a dilated convolution along one axis; throws when nonpositive.
int conv_output_extent(int input, int kernel, const ConvSpec& spec);

// x: N×C×H×W, weight: O×C×Kh×Kw, bias: O.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvSpec& spec);

template <class T>
Var<T> relu(const Var<T>& x);

template <class T>
Var<T> add(const Var<T>& x, const Var<T>& y);

/// x + gamma * y, gamma a one-element tensor. Returns an exact copy of x when gamma is 0.
template <class T>
Var<T> scale_add(const Var<T>& x, const Var<T>& y, const Var<T>& gamma);

/// Stacks N×Ci×H×W maps along the channel axis in argument order.
template <class T>
Var<T> concat_channels(std::span<const Var<T>> xs);

template <class T>
Var<T> slice_channels(const Var<T>& x, int begin, int count);

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// Swaps the two trailing axes of a rank-2 or rank-3 tensor.
template <class T>
Var<T> transpose_last2(const Var<T>& x);

/// Rank-2 (M×K · K×P) or batched rank-3 (B×M×K · B×K×P) product.
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

/// Softmax over the last axis, stabilised by subtracting the row maximum.
template <class T>
Var<T> softmax_rows(const Var<T>& x);

/// Bilinear resize by an integer factor with half-pixel centres (align_corners = false).
template <class T>
Var<T> bilinear_upsample(const Var<T>& x, int factor);

/// Mean squared error, returned as a one-element tensor.
template <class T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

/// Sum of all elements, returned as a one-element tensor.
template <class T>
Var<T> sum(const Var<T>& x);

struct GradCheckOptions {
  double eps = 1e-4;
  // 0 checks every coordinate; otherwise a seeded random subset per probe.
  std::size_t max_coords_per_probe = 0;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of <r, forward()> against central
/// differences, r a fixed random cotangent. Returns
/// max |analytic - numeric| / max(1, |numeric|) over the probed coordinates.
template <class T>
double gradient_check(const std::function<Var<T>(Tape<T>&)>& forward, std::span<Param<T>* const> probes,
                      const GradCheckOptions& options = {});

/// Convenience form for a pure op: each input becomes a probe.
template <class T>
double gradient_check(const std::function<Var<T>(Tape<T>&, std::span<const Var<T>>)>& op,
                      std::vector<BasicTensor<T>> inputs, const GradCheckOptions& options = {});

}  // namespace bipath
