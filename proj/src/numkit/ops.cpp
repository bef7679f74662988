#include "ird/numkit/ops.hpp"

#include <Eigen/Core>

#include "ird/common/errors.hpp"

namespace ird::num {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t) { return MapC(t.storage().data(), t.rows(), t.cols()); }
Map view(Tensor& t) { return Map(t.storage().data(), t.rows(), t.cols()); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw InvalidInput(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
  }
}

Shape matmul_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rank() > 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw InvalidInput(std::string(op) + ": inner dimensions disagree " + shape_string(a.shape()) +
                       " x " + shape_string(b.shape()));
  }
  if (a.rank() == 1) return Shape{b.cols()};
  return Shape{a.rows(), b.cols()};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out(matmul_shape(a, b, "matmul"));
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out(matmul_shape(x, w, "linear"));
  if (b.rank() != 1 || b.size() != w.cols()) {
    throw InvalidInput("linear: bias shape " + shape_string(b.shape()) + " vs output width " +
                       std::to_string(w.cols()));
  }
  auto y = view(out);
  y.noalias() = view(x) * view(w);
  y.rowwise() += view(b).row(0);
  return out;
}

Var linear(Var x, Var w, Var b) {
  Tape& t = *x.tape;
  Tensor out = linear(x.value(), w.value(), b.value());
  return t.record(std::move(out), {x, w, b}, [x, w, b](Tape& tp, const Tensor& g) {
    auto G = view(g);
    if (Tensor* gx = tp.grad_slot(x)) view(*gx).noalias() += G * view(w.value()).transpose();
    if (Tensor* gw = tp.grad_slot(w)) view(*gw).noalias() += view(x.value()).transpose() * G;
    if (Tensor* gb = tp.grad_slot(b)) view(*gb).row(0) += G.colwise().sum();
  });
}

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  Tensor out = matmul(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    auto G = view(g);
    if (Tensor* ga = tp.grad_slot(a)) view(*ga).noalias() += G * view(b.value()).transpose();
    if (Tensor* gb = tp.grad_slot(b)) view(*gb).noalias() += view(a.value()).transpose() * G;
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    for (Var v : {a, b}) {
      if (Tensor* gv = tp.grad_slot(v)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gv)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_slot(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = tp.grad_slot(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_slot(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    }
    if (Tensor* gb = tp.grad_slot(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.storage()) v *= c;
  return a.tape->record(std::move(out), {a}, [a, c](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_slot(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += c * g[i];
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return x.tape->record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_slot(x)) {
      const Tensor& in = x.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (in[i] > 0.0) (*gx)[i] += g[i];
      }
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().storage()) s += v;
  return x.tape->record(Tensor::scalar(s), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_slot(x)) {
      for (double& v : gx->storage()) v += g[0];
    }
  });
}

Var sum_squares(Var x) {
  double s = squared_norm(x.value().data());
  return x.tape->record(Tensor::scalar(s), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_slot(x)) {
      const Tensor& in = x.value();
      for (std::size_t i = 0; i < in.size(); ++i) (*gx)[i] += 2.0 * in[i] * g[0];
    }
  });
}

Var row_squared_distance(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "row_squared_distance");
  const std::size_t n = av.rows();
  const std::size_t d = av.cols();
  Tensor out(Shape{n});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = av.at(r, c) - bv.at(r, c);
      s += diff * diff;
    }
    out[r] = s;
  }
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor* ga = tp.grad_slot(a);
    Tensor* gb = tp.grad_slot(b);
    const std::size_t d = av.cols();
    for (std::size_t r = 0; r < av.rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double v = 2.0 * (av.at(r, c) - bv.at(r, c)) * g[r];
        if (ga) ga->at(r, c) += v;
        if (gb) gb->at(r, c) -= v;
      }
    }
  });
}

Var gather_rows(Var x, const std::vector<std::size_t>& rows) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw InvalidInput("gather_rows: expected a matrix, got " + shape_string(xv.shape()));
  const std::size_t d = xv.cols();
  Tensor out(Shape{rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) throw InvalidInput("gather_rows: row index out of range");
    auto src = xv.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return x.tape->record(std::move(out), {x}, [x, rows](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_slot(x)) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto dst = gx->row(rows[i]);
        auto src = g.row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
    }
  });
}

Var weighted_sum(Var v, const std::vector<double>& weights) {
  const Tensor& vv = v.value();
  if (weights.size() != vv.size()) {
    throw InvalidInput("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                       std::to_string(vv.size()) + " values");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < vv.size(); ++i) s += weights[i] * vv[i];
  return v.tape->record(Tensor::scalar(s), {v}, [v, weights](Tape& tp, const Tensor& g) {
    if (Tensor* gv = tp.grad_slot(v)) {
      for (std::size_t i = 0; i < weights.size(); ++i) (*gv)[i] += weights[i] * g[0];
    }
  });
}

}  // namespace ird::num
