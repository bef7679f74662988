#pragma once

#include <vector>

#include "ird/evalkit/ap.hpp"
#include "ird/relbranch/branch.hpp"
#include "ird/relbranch/candidates.hpp"

namespace ird::eval {

inline constexpr std::size_t kDefaultTopK = 100;

// Scores every candidate over the model's active relations, fuses with the
// detection confidences and keeps the top_k records per image. Only
// (object, relation) combinations that are HOI classes of the world are
// emitted.
std::vector<PredictionRecord> infer(const world::WorldSpec& spec, const rel::RelationBranch& model,
                                    const std::vector<rel::ImagePairs>& candidates, std::size_t top_k = kDefaultTopK);

// Convenience path that runs the detector first.
std::vector<PredictionRecord> infer(const world::World& world, const rel::RelationBranch& model,
                                    const std::vector<world::SynthImage>& images, const det::DetectorConfig& cfg,
                                    std::size_t top_k = kDefaultTopK);

}  // namespace ird::eval
