#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "ird/numkit/tensor.hpp"

namespace ird::num {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = std::numeric_limits<std::size_t>::max();

  bool valid() const { return tape != nullptr; }
  const Tensor& value() const;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction; backward() walks it in reverse and
// visits each node exactly once. A tape is built for one step and dropped.
class Tape {
 public:
  // Called once per node during backward with the node's accumulated
  // output gradient. Implementations push contributions into inputs via
  // grad_slot().
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient accumulator for an input during backward, or nullptr when the
  // input does not require a gradient.
  Tensor* grad_slot(Var v);

  void backward(Var loss);

  // Gradient of the last backward() w.r.t. v; zeros if v was unreachable.
  Tensor grad(Var v) const;

  // Number of nodes holding an allocated gradient buffer.
  std::size_t grad_buffers() const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

}  // namespace ird::num
