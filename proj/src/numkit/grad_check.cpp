#include "ird/numkit/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ird/common/errors.hpp"
#include "ird/numkit/params.hpp"

namespace ird::num {
namespace {

double evaluate(const ScalarFn& fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  const double v = fn(tape, vars).value().item();
  if (!std::isfinite(v)) throw RuntimeFailure("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check_detailed(const ScalarFn& fn, std::vector<Tensor> params, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw InvalidInput("grad_check: epsilon must lie in (0, 1e-2]");
  }
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.variable(p));
    Var out = fn(tape, vars);
    if (!std::isfinite(out.value().item())) throw RuntimeFailure("grad_check: function value is not finite");
    tape.backward(out);
    analytic = gradients(tape, vars);
  }

  GradCheckResult res;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double orig = params[p][i];
      params[p][i] = orig + epsilon;
      const double up = evaluate(fn, params);
      params[p][i] = orig - epsilon;
      const double down = evaluate(fn, params);
      params[p][i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > res.max_relative_error) {
        res.max_relative_error = err;
        res.worst_param = p;
        res.worst_index = i;
      }
    }
  }
  return res;
}

double grad_check(const ScalarFn& fn, std::vector<Tensor> params, double epsilon) {
  return grad_check_detailed(fn, std::move(params), epsilon).max_relative_error;
}

}  // namespace ird::num
