#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ird/numkit/tape.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::num {

// Ordered, named collection of parameter tensors. Order is the checkpoint
// order and the optimizer-state order.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor>& values() { return values_; }
  const std::vector<Tensor>& values() const { return values_; }

  // Index of the named parameter; throws InvalidInput when absent.
  std::size_t index(std::string_view name) const;
  Tensor& at(std::string_view name) { return values_[index(name)]; }
  const Tensor& at(std::string_view name) const { return values_[index(name)]; }

  // Same names in the same order with the same shapes.
  bool same_layout(const ParameterSet& other) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// Registers every parameter on the tape, as trainable variables or as
// constants (frozen snapshots, teachers).
std::vector<Var> bind(Tape& tape, const ParameterSet& params, bool trainable);
std::vector<Tensor> gradients(const Tape& tape, const std::vector<Var>& vars);

}  // namespace ird::num
