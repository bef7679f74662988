#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ird/synthworld/dataset.hpp"

namespace ird::eval {

using world::Box;

struct PredictionRecord {
  int image_id = 0;
  Box human;
  Box object;
  int object_class = 0;
  int relation = 0;
  double score = 0.0;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct GtPair {
  int image_id = 0;
  Box human;
  Box object;
};

inline constexpr double kMatchIou = 0.5;

// Per-prediction outcome after greedy matching in descending score order
// (stable for equal scores). Index i refers to the i-th input prediction.
std::vector<bool> greedy_match(const std::vector<PredictionRecord>& preds, const std::vector<GtPair>& gts);

// All-point interpolated AP from TP flags listed in ranked order.
double average_precision(const std::vector<bool>& ranked_tp, std::size_t n_gt);

// AP for one HOI class. nullopt when there are neither gts nor predictions;
// 0 when there are predictions but no gts.
std::optional<double> match_and_ap(const std::vector<PredictionRecord>& preds, const std::vector<GtPair>& gts);

// Ground-truth pairs of every class id in the images.
std::map<int, std::vector<GtPair>> gt_pairs_by_class(const world::WorldSpec& spec,
                                                     const std::vector<world::SynthImage>& images);

// AP for each of `class_ids`, grouping predictions by (object, relation).
std::map<int, std::optional<double>> per_class_ap(const world::WorldSpec& spec,
                                                  const std::vector<PredictionRecord>& preds,
                                                  const std::vector<world::SynthImage>& images,
                                                  const std::vector<int>& class_ids);

}  // namespace ird::eval
