#include "ird/distillcore/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ird/common/errors.hpp"
#include "ird/numkit/ops.hpp"
#include "ird/relbranch/branch.hpp"

namespace ird::distill {
namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double focal_term(double p, double target, double gamma, double alpha_f) {
  if (target > 0.5) return -alpha_f * std::pow(1.0 - p, gamma) * std::log(p);
  return -(1.0 - alpha_f) * std::pow(p, gamma) * std::log(1.0 - p);
}

// log(1 + e^x) without overflow or cancellation.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

bool clamped(double p) { return p < kProbClamp || p > 1.0 - kProbClamp; }

// focal_term of sigmoid(x), evaluated from the logit so that log(1-p) and
// 1-p keep full precision when p is close to 1.
double focal_term_logit(double x, double target, double gamma, double alpha_f) {
  const double p = rel::sigmoid(x);
  if (clamped(p)) return focal_term(clamp_prob(p), target, gamma, alpha_f);
  if (target > 0.5) return alpha_f * std::pow(rel::sigmoid(-x), gamma) * softplus(-x);
  return (1.0 - alpha_f) * std::pow(p, gamma) * softplus(x);
}

// d(focal_term_logit)/dx; zero where the probability is clamped.
double focal_term_grad(double x, double target, double gamma, double alpha_f) {
  const double p = rel::sigmoid(x);
  if (clamped(p)) return 0.0;
  const double q = rel::sigmoid(-x);
  if (target > 0.5) {
    const double log_p = -softplus(-x);
    return alpha_f * gamma * p * std::pow(q, gamma) * log_p - alpha_f * std::pow(q, gamma + 1.0);
  }
  const double log_q = -softplus(x);
  return (1.0 - alpha_f) * std::pow(p, gamma + 1.0) - (1.0 - alpha_f) * gamma * std::pow(p, gamma) * q * log_q;
}

// Temperature softmax over the first n entries.
std::vector<double> softmax_prefix(std::span<const double> s, std::size_t n, double t) {
  std::vector<double> q(n);
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, s[i] / t);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += (q[i] = std::exp(s[i] / t - mx));
  for (double& v : q) v /= z;
  return q;
}

// log softmax over the first n entries.
std::vector<double> log_softmax_prefix(std::span<const double> s, std::size_t n, double t) {
  std::vector<double> out(n);
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, s[i] / t);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(s[i] / t - mx);
  const double lz = mx + std::log(z);
  for (std::size_t i = 0; i < n; ++i) out[i] = s[i] / t - lz;
  return out;
}

void check_temperature(double t) {
  if (!(t > 0.0)) throw InvalidInput("cdd: temperature must be positive");
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {alpha0, alpha1, alpha2, gamma, alpha_f}) {
    if (!(v >= 0.0)) throw InvalidInput("loss weights must be non-negative");
  }
  if (alpha_f > 1.0) throw InvalidInput("alpha_f must lie in [0,1]");
  check_temperature(t_cdd);
}

double focal_loss(std::span<const double> probs, std::span<const double> targets, double gamma, double alpha_f) {
  if (probs.size() != targets.size()) {
    throw InvalidInput("focal_loss: " + std::to_string(probs.size()) + " probabilities for " +
                       std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) total += focal_term(clamp_prob(probs[k]), targets[k], gamma, alpha_f);
  return total;
}

num::Var focal_loss(num::Var logits, const num::Tensor& targets, const num::Tensor& mask, double gamma,
                    double alpha_f) {
  const num::Tensor& s = logits.value();
  if (!s.same_shape(targets) || !s.same_shape(mask)) {
    throw InvalidInput("focal_loss: logits " + num::shape_string(s.shape()) + ", targets " +
                       num::shape_string(targets.shape()) + ", mask " + num::shape_string(mask.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mask[i] == 0.0) continue;
    total += mask[i] * focal_term_logit(s[i], targets[i], gamma, alpha_f);
  }
  return logits.tape->record(num::Tensor::scalar(total), {logits},
                             [logits, targets, mask, gamma, alpha_f](num::Tape& tp, const num::Tensor& g) {
                               num::Tensor* gs = tp.grad_slot(logits);
                               if (!gs) return;
                               const num::Tensor& s = logits.value();
                               for (std::size_t i = 0; i < s.size(); ++i) {
                                 if (mask[i] == 0.0) continue;
                                 (*gs)[i] += g[0] * mask[i] *
                                             focal_term_grad(s[i], targets[i], gamma, alpha_f);
                               }
                             });
}

double cdd_loss(std::span<const double> current, std::span<const double> previous, std::size_t n_old,
                double temperature) {
  check_temperature(temperature);
  if (n_old == 0) return 0.0;
  if (current.size() < n_old || previous.size() < n_old) {
    throw InvalidInput("cdd_loss: logit vectors shorter than the old-class count");
  }
  const auto q_prev = softmax_prefix(previous, n_old, temperature);
  const auto log_q = log_softmax_prefix(current, n_old, temperature);
  double loss = 0.0;
  for (std::size_t i = 0; i < n_old; ++i) loss -= q_prev[i] * log_q[i];
  return loss;
}

num::Var cdd_loss(num::Var current, const num::Tensor& previous, std::size_t n_old, double temperature) {
  check_temperature(temperature);
  const num::Tensor& s = current.value();
  if (n_old == 0 || s.rows() == 0 || s.size() == 0) {
    return current.tape->record(num::Tensor::scalar(0.0), {current}, [](num::Tape&, const num::Tensor&) {});
  }
  if (s.cols() < n_old || previous.cols() < n_old || previous.rows() != s.rows()) {
    throw InvalidInput("cdd_loss: current " + num::shape_string(s.shape()) + " / previous " +
                       num::shape_string(previous.shape()) + " incompatible with " + std::to_string(n_old) +
                       " old classes");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < s.rows(); ++r) total += cdd_loss(s.row(r), previous.row(r), n_old, temperature);
  return current.tape->record(num::Tensor::scalar(total), {current},
                              [current, previous, n_old, temperature](num::Tape& tp, const num::Tensor& g) {
                                num::Tensor* gs = tp.grad_slot(current);
                                if (!gs) return;
                                const num::Tensor& s = current.value();
                                for (std::size_t r = 0; r < s.rows(); ++r) {
                                  const auto q = softmax_prefix(s.row(r), n_old, temperature);
                                  const auto qp = softmax_prefix(previous.row(r), n_old, temperature);
                                  auto gr = gs->row(r);
                                  for (std::size_t i = 0; i < n_old; ++i) gr[i] += g[0] * (q[i] - qp[i]) / temperature;
                                }
                              });
}

double mfd_loss(std::span<const double> teacher, std::span<const double> current) {
  if (teacher.size() != current.size()) throw InvalidInput("mfd_loss: feature dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < teacher.size(); ++i) s += (teacher[i] - current[i]) * (teacher[i] - current[i]);
  return s;
}

num::Var mfd_loss(num::Var current, const num::Tensor& teacher) {
  num::Var t = current.tape->constant(teacher);
  return num::sum(num::row_squared_distance(current, t));
}

double cfd_loss(std::span<const double> current, std::span<const double> reference) {
  if (reference.size() != current.size()) throw InvalidInput("cfd_loss: feature dimension mismatch");
  return mfd_loss(reference, current);
}

num::Var cfd_loss(num::Var current, const num::Tensor& reference) {
  num::Var r = current.tape->constant(reference);
  return num::sum(num::row_squared_distance(current, r));
}

}  // namespace ird::distill
