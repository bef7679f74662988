#pragma once

#include "ird/relbranch/branch.hpp"

namespace ird::distill {

inline constexpr double kDefaultMomentum = 0.999;

// EMA copy of the relation branch. Never bound as trainable on a tape.
class MomentumTeacher {
 public:
  MomentumTeacher() = default;
  MomentumTeacher(rel::RelationBranch initial, double momentum = kDefaultMomentum);

  const rel::RelationBranch& branch() const { return branch_; }
  double momentum() const { return m_; }

  // theta_s <- m theta_s + (1-m) theta_c, element-wise. Throws InvalidInput
  // when the layouts differ (grow the teacher first).
  void ema_update(const rel::RelationBranch& current);

  // Copy the head rows the current model gained since the last growth.
  void grow(const rel::RelationBranch& current);

  // Replace parameters wholesale (checkpoint restore).
  void set_params(num::ParameterSet params);

 private:
  rel::RelationBranch branch_;
  double m_ = kDefaultMomentum;
};

}  // namespace ird::distill
