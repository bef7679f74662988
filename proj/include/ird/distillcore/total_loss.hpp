#pragma once

#include <cstddef>
#include <vector>

#include "ird/common/rng.hpp"
#include "ird/distillcore/dictionary.hpp"
#include "ird/distillcore/losses.hpp"
#include "ird/distillcore/teacher.hpp"
#include "ird/relbranch/branch.hpp"

namespace ird::distill {

// Supervision for one candidate pair. A matched pair (in P_s) lists its
// positive relation ids; `ignored` relations are masked out of the focal
// loss (labels that exist but belong to another phase).
struct PairTarget {
  bool supervised = false;
  std::vector<int> positives;
  std::vector<int> ignored;
};

struct LossBatch {
  num::Tensor inputs;  // [n, pair_input_dim]
  std::vector<PairTarget> targets;
};

struct DistillContext {
  const rel::RelationBranch* previous = nullptr;  // frozen end-of-last-phase model; null in phase 1
  const MomentumTeacher* teacher = nullptr;
  ConceptDictionary* dictionary = nullptr;
};

struct LossTerms {
  double rel = 0.0;
  double cdd = 0.0;  // unweighted
  double mfd = 0.0;
  double cfd = 0.0;
  double total = 0.0;
  std::size_t supervised = 0;
  std::size_t cfd_pairs = 0;  // pairs that got a reference feature
  std::size_t stored = 0;     // dictionary insertions
};

struct TotalLoss {
  num::Var value;
  LossTerms terms;
};

// L_rel over every candidate plus the weighted distillation terms over P_s.
// A term whose weight is 0 is not built at all. Teacher features of P_s
// are stored into the dictionary after the loss is formed; a pair's
// feature goes to the concept it retrieved from and to every concept of
// the pair not yet in the dictionary.
TotalLoss total_loss(num::Tape& tape, const rel::RelationBranch& current, const std::vector<num::Var>& bound,
                     const LossBatch& batch, const DistillContext& ctx, const LossWeights& weights, Rng& rng);

}  // namespace ird::distill
