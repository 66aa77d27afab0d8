#include "srcondense/autograd.hpp"

#include <unordered_set>

#include "srcondense/mac_counter.hpp"

namespace srcn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

namespace {
thread_local bool g_grad_enabled = true;
thread_local MacCounter* g_mac_counter = nullptr;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!node_) throw ContractError("Var: access to undefined variable");
  return node_->value;
}

template <typename T>
Tensor<T>& Var<T>::mutable_value() {
  if (!node_) throw ContractError("Var: access to undefined variable");
  return node_->value;
}

template <typename T>
bool Var<T>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename T>
bool Var<T>::has_grad() const {
  return node_ && !node_->grad.empty();
}

template <typename T>
const Tensor<T>& Var<T>::grad() const {
  if (!node_) throw ContractError("Var: access to undefined variable");
  return node_->grad_buffer();
}

template <typename T>
void Var<T>::zero_grad() const {
  if (node_) node_->grad = Tensor<T>();
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (const auto& p : parents) node->parents.push_back(p.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Var<T>::from_node(std::move(node));
}

template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.defined() || loss.value().numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? loss.shape().str() : std::string("<undefined>")));
  }
  Node<T>* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p != nullptr && p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void MacCounter::record(std::string op, const Shape& output, std::uint64_t macs) {
  records_.push_back({std::move(op), output, macs});
}

std::uint64_t MacCounter::total() const {
  std::uint64_t t = 0;
  for (const auto& r : records_) t += r.macs;
  return t;
}

MacCountingScope::MacCountingScope(MacCounter& counter) : previous_(g_mac_counter) {
  g_mac_counter = &counter;
}
MacCountingScope::~MacCountingScope() { g_mac_counter = previous_; }

void detail::report_macs(const char* op, const Shape& output, std::uint64_t macs) {
  if (g_mac_counter) g_mac_counter->record(op, output, macs);
}

template class Var<float>;
template class Var<double>;
template Var<float> make_result(Tensor<float>, std::vector<Var<float>>,
                                std::function<void(Node<float>&)>);
template Var<double> make_result(Tensor<double>, std::vector<Var<double>>,
                                 std::function<void(Node<double>&)>);
template void backward(const Var<float>&);
template void backward(const Var<double>&);

}  // namespace srcn
