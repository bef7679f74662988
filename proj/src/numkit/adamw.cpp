#include "ird/numkit/adamw.hpp"

#include <cmath>

#include "ird/common/errors.hpp"

namespace ird::num {

void AdamW::step(ParameterSet& params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.size()) {
    throw InvalidInput("adamw: " + std::to_string(grads.size()) + " gradients for " +
                       std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].same_shape(params.value(i))) {
      throw InvalidInput("adamw: gradient shape " + shape_string(grads[i].shape()) + " for parameter '" +
                         params.name(i) + "' of shape " + shape_string(params.value(i).shape()));
    }
    if (!grads[i].all_finite()) {
      throw RuntimeFailure("adamw: non-finite gradient for parameter '" + params.name(i) + "' at step " +
                           std::to_string(steps_ + 1) + "; step rejected");
    }
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto& p : params.values()) {
      m_.push_back(p.zeros_like());
      v_.push_back(p.zeros_like());
    }
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!m_[i].same_shape(params.value(i))) {
      throw InvalidInput("adamw: optimizer state shape no longer matches parameter '" + params.name(i) + "'");
    }
    Tensor& p = params.value(i);
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= cfg_.lr * cfg_.weight_decay * p[k];
      p[k] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace ird::num
