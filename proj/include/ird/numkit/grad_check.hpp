#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ird/numkit/tape.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::num {

// A pure scalar-valued function of its parameters, expressed on a tape.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
};

// Compares reverse-mode gradients against central differences.
// Error per element is |analytic - numeric| / max(1, |analytic|).
// Throws RuntimeFailure when fn is non-finite at any evaluation point and
// InvalidInput when epsilon is outside (0, 1e-2].
GradCheckResult grad_check_detailed(const ScalarFn& fn, std::vector<Tensor> params, double epsilon = 1e-5);
double grad_check(const ScalarFn& fn, std::vector<Tensor> params, double epsilon = 1e-5);

}  // namespace ird::num
