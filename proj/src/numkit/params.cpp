#include "ird/numkit/params.hpp"

#include "ird/common/errors.hpp"

namespace ird::num {

void ParameterSet::add(std::string name, Tensor value) {
  for (const auto& n : names_) {
    if (n == name) throw InvalidInput("duplicate parameter name '" + name + "'");
  }
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

std::size_t ParameterSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw InvalidInput("no parameter named '" + std::string(name) + "'");
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!values_[i].same_shape(other.values_[i])) return false;
  }
  return true;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::vector<Var> bind(Tape& tape, const ParameterSet& params, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& v : params.values()) {
    vars.push_back(trainable ? tape.variable(v) : tape.constant(v));
  }
  return vars;
}

std::vector<Tensor> gradients(const Tape& tape, const std::vector<Var>& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (Var v : vars) out.push_back(tape.grad(v));
  return out;
}

}  // namespace ird::num
