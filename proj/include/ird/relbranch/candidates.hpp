#pragma once

#include <vector>

#include "ird/detstub/detector.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::rel {

// Detector output for one image turned into encoder-ready candidates.
// Feature pointers in `pairs` are cleared; `inputs` row i belongs to pairs[i].
struct ImagePairs {
  int image_id = 0;
  std::vector<det::BoxPair> pairs;
  num::Tensor inputs;
};

ImagePairs image_pairs(const world::World& world, const world::SynthImage& image, const det::DetectorConfig& cfg);

}  // namespace ird::rel
