#pragma once

#include <cstddef>
#include <span>

#include "ird/numkit/tape.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::distill {

inline constexpr double kProbClamp = 1e-7;

struct LossWeights {
  double alpha0 = 2.5;   // CDD
  double alpha1 = 0.05;  // MFD
  double alpha2 = 0.05;  // CFD
  double gamma = 0.2;    // focal focusing
  double alpha_f = 0.5;  // focal positive weight
  double t_cdd = 1.0;    // CDD temperature

  void validate() const;
};

// Binary focal loss summed over classes. probs are sigmoid outputs, clamped
// to [1e-7, 1-1e-7]; targets are 0/1.
//   positive: -alpha_f (1-p)^gamma log p
//   negative: -(1-alpha_f) p^gamma log(1-p)
double focal_loss(std::span<const double> probs, std::span<const double> targets, double gamma, double alpha_f);

// Tape version on logits [n,K]. Entries with mask 0 contribute nothing.
num::Var focal_loss(num::Var logits, const num::Tensor& targets, const num::Tensor& mask, double gamma,
                    double alpha_f);

// -sum_i q_prev_i log q_cur_i over the first n_old logits, q = softmax(s/T).
// Zero when n_old == 0.
double cdd_loss(std::span<const double> current, std::span<const double> previous, std::size_t n_old,
                double temperature);

// Tape version: rows of `current` [n,K] against constant `previous` [n,>=n_old],
// summed over rows.
num::Var cdd_loss(num::Var current, const num::Tensor& previous, std::size_t n_old, double temperature);

// ||teacher - current||^2.
double mfd_loss(std::span<const double> teacher, std::span<const double> current);
// Tape version, summed over rows; gradients reach `current` only.
num::Var mfd_loss(num::Var current, const num::Tensor& teacher);

// ||current - reference||^2.
double cfd_loss(std::span<const double> current, std::span<const double> reference);
num::Var cfd_loss(num::Var current, const num::Tensor& reference);

}  // namespace ird::distill
