#include "ird/evalkit/infer.hpp"

#include <algorithm>

namespace ird::eval {

std::vector<PredictionRecord> infer(const world::WorldSpec& spec, const rel::RelationBranch& model,
                                    const std::vector<rel::ImagePairs>& candidates, std::size_t top_k) {
  std::vector<PredictionRecord> out;
  const auto& relations = model.relations();
  const double lambda = model.config().lambda;
  for (const auto& ip : candidates) {
    if (ip.pairs.empty() || relations.empty()) continue;
    const num::Tensor logits = model.classify(model.encode(ip.inputs));
    std::vector<PredictionRecord> recs;
    for (std::size_t i = 0; i < ip.pairs.size(); ++i) {
      const auto& p = ip.pairs[i];
      if (p.object_class == world::kHuman) continue;
      const auto scores = rel::fuse_scores(p.human_score, p.object_score, logits.row(i), lambda);
      for (std::size_t k = 0; k < relations.size(); ++k) {
        if (spec.class_id(p.object_class, relations[k]) < 0) continue;
        recs.push_back({ip.image_id, p.human_box, p.object_box, p.object_class, relations[k], scores[k]});
      }
    }
    std::stable_sort(recs.begin(), recs.end(),
                     [](const PredictionRecord& a, const PredictionRecord& b) { return a.score > b.score; });
    if (recs.size() > top_k) recs.resize(top_k);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

std::vector<PredictionRecord> infer(const world::World& world, const rel::RelationBranch& model,
                                    const std::vector<world::SynthImage>& images, const det::DetectorConfig& cfg,
                                    std::size_t top_k) {
  std::vector<rel::ImagePairs> cands;
  cands.reserve(images.size());
  for (const auto& img : images) cands.push_back(rel::image_pairs(world, img, cfg));
  return infer(world.spec(), model, cands, top_k);
}

}  // namespace ird::eval
