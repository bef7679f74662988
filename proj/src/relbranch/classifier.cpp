#include <Eigen/Core>
#include <cmath>

#include "ird/common/errors.hpp"
#include "ird/relbranch/branch.hpp"

namespace ird::rel {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const num::Tensor& t) { return MapC(t.storage().data(), t.rows(), t.cols()); }
Map view(num::Tensor& t) { return Map(t.storage().data(), t.rows(), t.cols()); }

// Rows divided by (norm + eps); also returns the raw norms.
RowMat normalized_rows(const num::Tensor& t, Eigen::VectorXd& norms) {
  RowMat m = view(t);
  norms = m.rowwise().norm();
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) /= (norms[r] + kCosineEps);
  return m;
}

// Backprop through v / (|v| + eps) for every row.
void normalize_backward(const num::Tensor& raw, const Eigen::VectorXd& norms, const RowMat& upstream,
                        num::Tensor& grad) {
  auto v = view(raw);
  auto g = view(grad);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double n = norms[r] + kCosineEps;
    g.row(r) += upstream.row(r) / n;
    if (norms[r] > 0.0) {
      const double proj = v.row(r).dot(upstream.row(r));
      g.row(r) -= v.row(r) * (proj / (n * n * norms[r]));
    }
  }
}

void check_shapes(const num::Tensor& z, const num::Tensor& w) {
  if (z.cols() != w.cols() || w.rank() != 2) {
    throw InvalidInput("cosine_logits: feature width " + std::to_string(z.cols()) + " vs classifier width " +
                       std::to_string(w.cols()));
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

num::Tensor cosine_logits(const num::Tensor& z, const num::Tensor& w, double log_eta) {
  check_shapes(z, w);
  Eigen::VectorXd zn, wn;
  const RowMat zh = normalized_rows(z, zn);
  const RowMat wh = normalized_rows(w, wn);
  num::Tensor out(z.rank() == 1 ? num::Shape{w.rows()} : num::Shape{z.rows(), w.rows()});
  view(out).noalias() = std::exp(log_eta) * zh * wh.transpose();
  return out;
}

num::Var cosine_logits(num::Var z, num::Var w, num::Var log_eta) {
  num::Tensor out = cosine_logits(z.value(), w.value(), log_eta.value().item());
  return z.tape->record(std::move(out), {z, w, log_eta}, [z, w, log_eta](num::Tape& tp, const num::Tensor& g) {
    const double eta = std::exp(log_eta.value().item());
    Eigen::VectorXd zn, wn;
    const RowMat zh = normalized_rows(z.value(), zn);
    const RowMat wh = normalized_rows(w.value(), wn);
    const RowMat gc = eta * view(g);  // dL/d(cosine)
    if (num::Tensor* gz = tp.grad_slot(z)) {
      const RowMat up = gc * wh;
      normalize_backward(z.value(), zn, up, *gz);
    }
    if (num::Tensor* gw = tp.grad_slot(w)) {
      const RowMat up = gc.transpose() * zh;
      normalize_backward(w.value(), wn, up, *gw);
    }
    if (num::Tensor* ge = tp.grad_slot(log_eta)) {
      // d s / d log_eta = s = eta * cosine
      const RowMat cos = zh * wh.transpose();
      (*ge)[0] += eta * (view(g).array() * cos.array()).sum();
    }
  });
}

std::vector<double> fuse_scores(double human_score, double object_score, std::span<const double> logits,
                                double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("fuse_scores: lambda must lie in [0,1]");
  const double det = std::pow(human_score * object_score, 1.0 - lambda);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = det * std::pow(sigmoid(logits[k]), lambda);
  return out;
}

}  // namespace ird::rel
