#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ird/synthworld/dataset.hpp"
#include "ird/synthworld/world.hpp"

namespace ird::det {

using world::Box;

// |a ∩ b| / |a ∪ b|; 0 for disjoint or degenerate boxes.
double iou(const Box& a, const Box& b);

struct DetectorConfig {
  double jitter_scale = 0.05;    // coordinate noise, relative to box size
  double spurious_rate = 1.0;    // expected false detections per image
  double score_threshold = 0.2;
  double nms_iou = 0.5;
  double confidence_decay = 3.0; // s = exp(-decay * mean relative offset)
  std::uint64_t seed = 7;

  void validate() const;
};

struct Detection {
  Box box;
  double score = 1.0;
  int category = world::kHuman;
  std::vector<double> features;
  int source_instance = -1;  // gt instance it was derived from, -1 if spurious
};

struct DetectionResult {
  std::vector<double> global;
  std::vector<Detection> detections;
};

// Greedy per-category NMS; survivors are returned by descending score
// (ties keep input order).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// Frozen object branch: one detection per gt box plus spurious ones,
// jittered, thresholded and NMS-filtered. Output depends only on the
// image, the world and the config.
DetectionResult detect(const world::World& world, const world::SynthImage& image, const DetectorConfig& cfg);

struct GtMatch {
  int instance = -1;
  double min_iou = 0.0;
};

struct BoxPair {
  int human_det = -1;
  int object_det = -1;
  Box human_box;
  Box object_box;
  int object_class = 0;  // may be kHuman for person-person pairs
  double human_score = 1.0;
  double object_score = 1.0;
  const std::vector<double>* human_features = nullptr;
  const std::vector<double>* object_features = nullptr;
  std::optional<GtMatch> match;
};

inline constexpr double kPairMatchIou = 0.5;

// All ordered (human, other) pairs. A pair is matched to the gt instance
// with the largest min(human IoU, object IoU) >= 0.5 whose object class
// equals the detected class; ties go to the lowest instance index.
// Feature pointers refer into `dets`, which must outlive the pairs.
std::vector<BoxPair> pair(const std::vector<Detection>& dets, const std::vector<world::GtInstance>& gts);

}  // namespace ird::det
