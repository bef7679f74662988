#include "ird/relbranch/candidates.hpp"

#include "ird/relbranch/branch.hpp"

namespace ird::rel {

ImagePairs image_pairs(const world::World& world, const world::SynthImage& image, const det::DetectorConfig& cfg) {
  const det::DetectionResult dr = det::detect(world, image, cfg);
  ImagePairs out;
  out.image_id = image.id;
  out.pairs = det::pair(dr.detections, image.instances);
  const std::size_t dim = pair_input_dim(world.spec().feature_dim(), dr.global.size());
  out.inputs = out.pairs.empty() ? num::Tensor(num::Shape{0, dim}) : pair_inputs(out.pairs, dr.global);
  for (auto& p : out.pairs) {
    p.human_features = nullptr;
    p.object_features = nullptr;
  }
  return out;
}

}  // namespace ird::rel
