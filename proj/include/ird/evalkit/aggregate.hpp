#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ird/curriculum/plan.hpp"

namespace ird::eval {

inline constexpr std::size_t kRareThreshold = 10;

using Metric = std::optional<double>;

struct EvalReport {
  int phase = 1;
  std::map<int, Metric> class_ap;  // class id -> AP (absent when undefined)
  Metric old_map;    // C_{1:t-1}
  Metric full;       // C_{1:t}
  Metric rare;
  Metric non_rare;
  Metric rid_phase;  // RID(t) over this phase's drift set
  Metric rid;        // running average of RID(2..t)
  Metric uc;
  std::vector<int> old_set, full_set, rare_set, non_rare_set, rid_set, uc_set;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Mean of the defined APs over `ids`; absent when none is defined.
Metric mean_ap(const std::map<int, Metric>& aps, const std::vector<int>& ids);

// `previous_rid` holds RID(2..t-1) from earlier phases (absent entries are
// skipped in the running average). `train_counts` is indexed by class id.
EvalReport aggregate(const cur::PhasePlan& plan, const std::map<int, Metric>& aps, int t,
                     const std::vector<std::size_t>& train_counts, const std::vector<int>& c_test,
                     std::span<const Metric> previous_rid, std::size_t rare_threshold = kRareThreshold);

}  // namespace ird::eval
