#include "ird/distillcore/teacher.hpp"

#include "ird/common/errors.hpp"

namespace ird::distill {

MomentumTeacher::MomentumTeacher(rel::RelationBranch initial, double momentum)
    : branch_(std::move(initial)), m_(momentum) {
  if (!(m_ >= 0.0 && m_ <= 1.0)) throw InvalidInput("momentum must lie in [0,1]");
}

void MomentumTeacher::ema_update(const rel::RelationBranch& current) {
  const num::ParameterSet& cur = current.params();
  num::ParameterSet& mine = branch_.params();
  if (!mine.same_layout(cur) || branch_.relations() != current.relations()) {
    throw InvalidInput("ema_update: teacher layout differs from the current model; grow the teacher first");
  }
  for (std::size_t i = 0; i < mine.size(); ++i) {
    auto& s = mine.value(i).storage();
    const auto& c = cur.value(i).storage();
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = m_ * s[k] + (1.0 - m_) * c[k];
  }
}

void MomentumTeacher::grow(const rel::RelationBranch& current) { branch_.grow_head_from(current); }

void MomentumTeacher::set_params(num::ParameterSet params) {
  if (!branch_.params().same_layout(params)) throw InvalidInput("teacher: parameter layout mismatch");
  branch_.params() = std::move(params);
}

}  // namespace ird::distill
