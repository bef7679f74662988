#include "ird/distillcore/total_loss.hpp"

#include <algorithm>

#include "ird/common/errors.hpp"
#include "ird/numkit/ops.hpp"

namespace ird::distill {
namespace {

num::Tensor select_rows(const num::Tensor& t, const std::vector<std::size_t>& rows) {
  const std::size_t w = t.cols();
  std::vector<double> data;
  data.reserve(rows.size() * w);
  for (std::size_t r : rows) {
    auto src = t.row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return num::Tensor(num::Shape{rows.size(), w}, std::move(data));
}


}  // namespace

TotalLoss total_loss(num::Tape& tape, const rel::RelationBranch& current, const std::vector<num::Var>& bound,
                     const LossBatch& batch, const DistillContext& ctx, const LossWeights& weights, Rng& rng) {
  weights.validate();
  const std::size_t n = batch.targets.size();
  if (batch.inputs.rows() != n || batch.inputs.rank() != 2) {
    throw InvalidInput("total_loss: " + std::to_string(n) + " targets for inputs of shape " +
                       num::shape_string(batch.inputs.shape()));
  }
  const std::size_t k = current.active_relations();

  num::Tensor targets(num::Shape{n, k});
  num::Tensor mask(num::Shape{n, k}, 1.0);
  std::vector<std::size_t> sup;
  for (std::size_t i = 0; i < n; ++i) {
    const PairTarget& pt = batch.targets[i];
    for (int r : pt.positives) {
      const int row = current.row_of(r);
      if (row < 0) throw InvalidInput("total_loss: positive relation " + std::to_string(r) + " has no head row");
      targets.at(i, static_cast<std::size_t>(row)) = 1.0;
    }
    for (int r : pt.ignored) {
      const int row = current.row_of(r);
      if (row >= 0) mask.at(i, static_cast<std::size_t>(row)) = 0.0;
    }
    if (pt.supervised) {
      if (pt.positives.empty()) throw InvalidInput("total_loss: supervised pair without relation concepts");
      sup.push_back(i);
    }
  }

  TotalLoss out;
  out.terms.supervised = sup.size();

  num::Var x = tape.constant(batch.inputs);
  num::Var z = current.encode(bound, x);
  num::Var logits = current.classify(bound, z);
  num::Var total = focal_loss(logits, targets, mask, weights.gamma, weights.alpha_f);
  out.terms.rel = total.value().item();

  if (sup.empty()) {
    out.terms.total = out.terms.rel;
    out.value = total;
    return out;
  }
  const num::Tensor sup_inputs = select_rows(batch.inputs, sup);

  // CDD against the frozen previous-phase model over its classes.
  if (weights.alpha0 > 0.0 && ctx.previous && ctx.previous->active_relations() > 0) {
    const std::size_t n_old = ctx.previous->active_relations();
    const num::Tensor prev_logits = ctx.previous->classify(ctx.previous->encode(sup_inputs));
    num::Var cdd = cdd_loss(num::gather_rows(logits, sup), prev_logits, n_old, weights.t_cdd);
    out.terms.cdd = cdd.value().item();
    total = num::add(total, num::scale(cdd, weights.alpha0));
  }

  const bool want_mfd = weights.alpha1 > 0.0 && ctx.teacher;
  const bool want_cfd = weights.alpha2 > 0.0 && ctx.teacher && ctx.dictionary;
  if (!want_mfd && !want_cfd) {
    out.terms.total = total.value().item();
    out.value = total;
    return out;
  }
  const num::Tensor teacher_z = ctx.teacher->branch().encode(sup_inputs);
  num::Var z_sup = num::gather_rows(z, sup);

  if (want_mfd) {
    num::Var mfd = mfd_loss(z_sup, teacher_z);
    out.terms.mfd = mfd.value().item();
    total = num::add(total, num::scale(mfd, weights.alpha1));
  }

  if (want_cfd) {
    ConceptDictionary& dict = *ctx.dictionary;
    std::vector<std::size_t> cfd_rows;
    std::vector<double> refs;
    std::vector<int> picked(sup.size(), -1);
    for (std::size_t j = 0; j < sup.size(); ++j) {
      const auto& concepts = batch.targets[sup[j]].positives;
      if (auto hit = dict.retrieve(concepts, rng)) {
        picked[j] = hit->concept_id;
        cfd_rows.push_back(j);
        refs.insert(refs.end(), hit->feature.begin(), hit->feature.end());
      }
    }
    out.terms.cfd_pairs = cfd_rows.size();
    if (!cfd_rows.empty()) {
      const num::Tensor ref(num::Shape{cfd_rows.size(), teacher_z.cols()}, std::move(refs));
      num::Var cfd = cfd_loss(num::gather_rows(z_sup, cfd_rows), ref);
      out.terms.cfd = cfd.value().item();
      total = num::add(total, num::scale(cfd, weights.alpha2));
    }
    // Stores come after every retrieval of this step.
    for (std::size_t j = 0; j < sup.size(); ++j) {
      auto feat = teacher_z.row(j);
      const std::vector<double> f(feat.begin(), feat.end());
      std::vector<int> dest;
      if (picked[j] >= 0) dest.push_back(picked[j]);
      for (int c : batch.targets[sup[j]].positives) {
        if (!dict.contains(c) && std::find(dest.begin(), dest.end(), c) == dest.end()) dest.push_back(c);
      }
      for (int c : dest) {
        dict.store(c, f);
        ++out.terms.stored;
      }
    }
  }

  out.terms.total = total.value().item();
  out.value = total;
  return out;
}

}  // namespace ird::distill
