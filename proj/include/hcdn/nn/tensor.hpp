#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "hcdn/errors.hpp"

namespace hcdn::nn {

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

/// Thread-local tape switch; ops built while disabled carry no gradient
/// storage or backward thunks (inference mode).
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool previous;
  NoGradGuard() : previous(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = previous; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

/// One vertex of the reverse-mode tape. Creation order is a topological
/// order of the DAG (parents always exist before children), so backward just
/// replays reachable nodes by descending id.
template <typename T>
struct Node {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::uint64_t id = next_node_id();
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

template <typename T>
using TensorPtr = std::shared_ptr<Node<T>>;

template <typename T>
TensorPtr<T> make_leaf(std::vector<int> shape, bool requires_grad, T fill = T(0)) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value.assign(node->numel(), fill);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), T(0));
  return node;
}

template <typename T>
TensorPtr<T> make_const(std::vector<int> shape, std::vector<T> values) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  if (values.size() != node->numel())
    raise(ErrorCode::ShapeMismatch, "constant data size does not match shape");
  node->value = std::move(values);
  return node;
}

/// Internal helper: result node wired to its parents; gradient storage and
/// the backward thunk attach only when some parent needs gradients.
template <typename T>
TensorPtr<T> make_op(std::vector<int> shape, std::vector<TensorPtr<T>> parents,
                     std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value.assign(node->numel(), T(0));
  if (grad_mode()) {
    for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
    node->parents = std::move(parents);
  }
  if (node->requires_grad) {
    node->grad.assign(node->value.size(), T(0));
    node->backward_fn = std::move(backward_fn);
  }
  return node;
}

template <typename T>
void accumulate_grad(const TensorPtr<T>& parent, const std::vector<T>& contribution) {
  if (!parent->requires_grad) return;
  for (std::size_t i = 0; i < contribution.size(); ++i) parent->grad[i] += contribution[i];
}

/// Reverse pass from a scalar root. Reachable nodes replay their backward
/// thunks in descending creation order (a valid reverse topological order).
template <typename T>
void backward(const TensorPtr<T>& root) {
  if (root->numel() != 1)
    raise(ErrorCode::ShapeMismatch, "backward root must be a scalar");
  if (!root->requires_grad) return;

  std::vector<Node<T>*> reachable;
  std::vector<Node<T>*> stack{root.get()};
  std::unordered_set<const Node<T>*> seen;
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    reachable.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad && !seen.count(p.get())) stack.push_back(p.get());
  }
  std::sort(reachable.begin(), reachable.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });

  root->grad[0] = T(1);
  for (Node<T>* n : reachable)
    if (n->backward_fn) n->backward_fn(*n);
}

}  // namespace hcdn::nn
