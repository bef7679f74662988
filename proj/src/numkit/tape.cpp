#include "ird/numkit/tape.hpp"

#include "ird/common/errors.hpp"

namespace ird::num {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw InvalidInput("tape op mixes variables from different tapes");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(fn) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

Tensor* Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = n.value.zeros_like();
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw InvalidInput("backward on a variable from another tape");
  const Node& root = nodes_[loss.id];
  if (root.value.size() != 1) {
    throw InvalidInput("backward requires a scalar loss, got shape " + shape_string(root.value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  if (!root.requires_grad) return;
  Tensor* seed = grad_slot(loss);
  (*seed)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Copy: the callback may allocate slots, and the deque keeps references
    // stable, but we want the value fixed while inputs accumulate.
    const Tensor g = n.grad;
    n.backward(*this, g);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  return n.value.zeros_like();
}

std::size_t Tape::grad_buffers() const {
  std::size_t c = 0;
  for (const Node& n : nodes_) c += n.has_grad ? 1 : 0;
  return c;
}

}  // namespace ird::num
