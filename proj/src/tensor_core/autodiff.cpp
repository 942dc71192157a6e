#include "bipath/autodiff.hpp"

#include <algorithm>

namespace bipath {

template <class T>
Var<T> Tape<T>::push(Node node) {
  if (backward_done_) throw std::logic_error("tape already consumed by backward");
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <class T>
Var<T> Tape<T>::constant(BasicTensor<T> value) {
  if (!value.all_finite()) throw NumericError("non-finite constant fed to tape");
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

template <class T>
Var<T> Tape<T>::variable(BasicTensor<T> value) {
  if (!value.all_finite()) throw NumericError("non-finite variable fed to tape");
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

template <class T>
Var<T> Tape<T>::param(Param<T>& p) {
  if (!p.value.all_finite()) throw NumericError("parameter " + p.name + " is not finite");
  Node node;
  node.value = p.value;
  node.requires_grad = true;
  node.param = &p;
  return push(std::move(node));
}

template <class T>
Var<T> Tape<T>::record(BasicTensor<T> value, std::span<const Var<T>> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("op produced non-finite values");
  Node node;
  node.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.valid() && &in.tape() != this) throw std::logic_error("op mixes vars from different tapes");
    node.requires_grad = node.requires_grad || nodes_.at(in.id()).requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

template <class T>
BasicTensor<T> Tape<T>::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.has_grad) return n.grad;
  return BasicTensor<T>(n.value.shape());
}

template <class T>
BasicTensor<T>& Tape<T>::grad_buffer(const Var<T>& v) {
  Node& n = nodes_.at(v.id());
  if (!n.has_grad) {
    n.grad = BasicTensor<T>(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <class T>
void Tape<T>::backward(const Var<T>& root) {
  if (value(root.id()).size() != 1) throw ShapeError("backward without seed needs a scalar root");
  backward(root, BasicTensor<T>(value(root.id()).shape(), T(1)));
}

template <class T>
void Tape<T>::backward(const Var<T>& root, const BasicTensor<T>& seed) {
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  if (&root.tape() != this) throw std::logic_error("root belongs to another tape");
  if (seed.shape() != value(root.id()).shape()) throw ShapeError("seed shape does not match root");
  backward_done_ = true;
  if (!nodes_[root.id()].requires_grad) return;
  grad_buffer(root) = seed;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace bipath
