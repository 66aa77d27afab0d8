#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "srcondense/tensor.hpp"

namespace srcn {

template <typename T>
struct Node;

/// Handle to a value participating in reverse-mode differentiation.
///
/// Leaves are created from a Tensor; every op in ops.hpp returns a new Var
/// that remembers its parents and a closure propagating its gradient into
/// them. backward() sorts the recorded graph topologically and replays the
/// closures in reverse. Copies of a Var alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Tensor<T>& value() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
  [[nodiscard]] bool requires_grad() const;

  /// Mutable access for optimizers and initialisers. Must not be used on a
  /// value that already feeds a recorded graph.
  [[nodiscard]] Tensor<T>& mutable_value();

  [[nodiscard]] bool has_grad() const;
  /// Gradient buffer; zero-filled with the value's shape if none was
  /// accumulated yet.
  [[nodiscard]] const Tensor<T>& grad() const;
  void zero_grad() const;

  [[nodiscard]] Node<T>* node() const { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  static Var from_node(std::shared_ptr<Node<T>> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
struct Node {
  Tensor<T> value;
  mutable Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  /// Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  /// Grad buffer for accumulation, allocated on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && value.numel() != 0) grad = Tensor<T>(value.shape());
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

[[nodiscard]] bool grad_enabled();

/// Builds the result node of an op. Parents are retained only when grad
/// recording is enabled and at least one parent requires a gradient.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward);

/// Populates grad() of every requires_grad node reachable from `loss`.
/// Throws ContractError unless `loss` holds exactly one element.
template <typename T>
void backward(const Var<T>& loss);

extern template class Var<float>;
extern template class Var<double>;

}  // namespace srcn
