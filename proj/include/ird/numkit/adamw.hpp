#pragma once

#include <cstdint>
#include <vector>

#include "ird/numkit/params.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::num {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Adam with decoupled weight decay:
//   p <- p - lr*decay*p - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  // Rejects (throws RuntimeFailure, parameters untouched) when any gradient
  // is non-finite, and InvalidInput when shapes disagree.
  void step(ParameterSet& params, const std::vector<Tensor>& grads);

  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamWConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return steps_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamWConfig cfg_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace ird::num
