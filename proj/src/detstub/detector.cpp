#include "ird/detstub/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ird/common/errors.hpp"
#include "ird/common/rng.hpp"

namespace ird::det {

double iou(const Box& a, const Box& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

void DetectorConfig::validate() const {
  if (!(jitter_scale >= 0.0)) throw InvalidInput("detector: jitter_scale must be non-negative");
  if (!(spurious_rate >= 0.0)) throw InvalidInput("detector: spurious_rate must be non-negative");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) throw InvalidInput("detector: score_threshold must lie in [0,1]");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw InvalidInput("detector: nms_iou must lie in (0,1]");
  if (!(confidence_decay >= 0.0)) throw InvalidInput("detector: confidence_decay must be non-negative");
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<bool> dropped(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (dropped[a]) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t b = order[j];
      if (!dropped[b] && dets[b].category == dets[a].category && iou(dets[a].box, dets[b].box) > iou_threshold) {
        dropped[b] = true;
      }
    }
    kept.push_back(std::move(dets[a]));
  }
  return kept;
}

namespace {

Detection jittered(const Box& gt, int category, std::vector<double> features, int source,
                   const DetectorConfig& cfg, Rng& rng) {
  const double w = gt.width();
  const double h = gt.height();
  const double d[4] = {normal(rng, cfg.jitter_scale) * w, normal(rng, cfg.jitter_scale) * h,
                       normal(rng, cfg.jitter_scale) * w, normal(rng, cfg.jitter_scale) * h};
  Detection det;
  if (cfg.jitter_scale == 0.0) {
    det.box = gt;
  } else {
    Box b{gt.x1 + d[0], gt.y1 + d[1], gt.x2 + d[2], gt.y2 + d[3]};
    b.x1 = std::clamp(b.x1, 0.0, 1.0);
    b.y1 = std::clamp(b.y1, 0.0, 1.0);
    b.x2 = std::clamp(b.x2, b.x1 + 1e-3, 1.0);
    b.y2 = std::clamp(b.y2, b.y1 + 1e-3, 1.0);
    if (!b.well_formed()) b = gt;
    det.box = b;
  }
  const double rel = (std::abs(d[0]) / w + std::abs(d[1]) / h + std::abs(d[2]) / w + std::abs(d[3]) / h) / 4.0;
  det.score = std::exp(-cfg.confidence_decay * rel);
  det.category = category;
  det.features = std::move(features);
  det.source_instance = source;
  return det;
}

}  // namespace

DetectionResult detect(const world::World& world, const world::SynthImage& image, const DetectorConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, image.feature_seed));
  DetectionResult out;
  out.global = world::global_feature(world, image);

  std::vector<Detection> raw;
  for (std::size_t i = 0; i < image.instances.size(); ++i) {
    const auto& inst = image.instances[i];
    auto feats = world::instance_features(world, image, i);
    raw.push_back(jittered(inst.human, world::kHuman, std::move(feats.human), static_cast<int>(i), cfg, rng));
    raw.push_back(jittered(inst.object, inst.object_class, std::move(feats.object), static_cast<int>(i), cfg, rng));
  }

  const double whole = std::floor(cfg.spurious_rate);
  std::size_t n_spurious = static_cast<std::size_t>(whole);
  if (uniform01(rng) < cfg.spurious_rate - whole) ++n_spurious;
  const int n_categories = world.spec().n_objects + 1;
  for (std::size_t k = 0; k < n_spurious; ++k) {
    const int cat = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_categories))) - 1;
    const double w = 0.04 + 0.08 * uniform01(rng);
    const double h = 0.04 + 0.16 * uniform01(rng);
    const double cx = 0.05 + 0.9 * uniform01(rng);
    const double cy = 0.05 + 0.9 * uniform01(rng);
    Detection det;
    det.box = Box{std::max(0.0, cx - w / 2), std::max(0.0, cy - h / 2), std::min(1.0, cx + w / 2),
                  std::min(1.0, cy + h / 2)};
    det.score = 0.1 + 0.6 * uniform01(rng);
    det.category = cat == -1 ? world::kHuman : cat;
    det.features = world::background_features(world, det.category, rng);
    raw.push_back(std::move(det));
  }

  std::erase_if(raw, [&](const Detection& d) { return d.score < cfg.score_threshold; });
  out.detections = nms(std::move(raw), cfg.nms_iou);
  return out;
}

std::vector<BoxPair> pair(const std::vector<Detection>& dets, const std::vector<world::GtInstance>& gts) {
  std::vector<BoxPair> pairs;
  for (std::size_t h = 0; h < dets.size(); ++h) {
    if (dets[h].category != world::kHuman) continue;
    for (std::size_t o = 0; o < dets.size(); ++o) {
      if (o == h) continue;
      BoxPair p;
      p.human_det = static_cast<int>(h);
      p.object_det = static_cast<int>(o);
      p.human_box = dets[h].box;
      p.object_box = dets[o].box;
      p.object_class = dets[o].category;
      p.human_score = dets[h].score;
      p.object_score = dets[o].score;
      p.human_features = &dets[h].features;
      p.object_features = &dets[o].features;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gts[g].object_class != p.object_class) continue;
        const double m = std::min(iou(p.human_box, gts[g].human), iou(p.object_box, gts[g].object));
        if (m >= kPairMatchIou && (!p.match || m > p.match->min_iou)) {
          p.match = GtMatch{static_cast<int>(g), m};
        }
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

}  // namespace ird::det
