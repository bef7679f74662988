#include "ird/evalkit/aggregate.hpp"

#include "ird/common/errors.hpp"

namespace ird::eval {

Metric mean_ap(const std::map<int, Metric>& aps, const std::vector<int>& ids) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int c : ids) {
    auto it = aps.find(c);
    if (it == aps.end() || !it->second) continue;
    sum += *it->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

EvalReport aggregate(const cur::PhasePlan& plan, const std::map<int, Metric>& aps, int t,
                     const std::vector<std::size_t>& train_counts, const std::vector<int>& c_test,
                     std::span<const Metric> previous_rid, std::size_t rare_threshold) {
  if (t < 1 || t > plan.phase_count) throw InvalidInput("aggregate: phase out of range");
  if (train_counts.size() != plan.class_table.size()) throw InvalidInput("aggregate: training counts per class required");
  EvalReport r;
  r.phase = t;
  r.old_set = plan.seen_classes(t - 1);
  r.full_set = plan.seen_classes(t);
  for (int c : r.full_set) (train_counts[c] < rare_threshold ? r.rare_set : r.non_rare_set).push_back(c);
  r.rid_set = cur::rid_set(plan, t);
  r.uc_set = cur::uc_set(plan, t, c_test);

  for (const auto* set : {&r.full_set, &r.uc_set}) {
    for (int c : *set) {
      auto it = aps.find(c);
      r.class_ap[c] = it == aps.end() ? std::nullopt : it->second;
    }
  }
  r.old_map = mean_ap(aps, r.old_set);
  r.full = mean_ap(aps, r.full_set);
  r.rare = mean_ap(aps, r.rare_set);
  r.non_rare = mean_ap(aps, r.non_rare_set);
  r.rid_phase = t >= 2 ? mean_ap(aps, r.rid_set) : std::nullopt;
  r.uc = mean_ap(aps, r.uc_set);

  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : previous_rid) {
    if (m) sum += *m, ++n;
  }
  if (r.rid_phase) sum += *r.rid_phase, ++n;
  if (n > 0) r.rid = sum / static_cast<double>(n);
  return r;
}

}  // namespace ird::eval
