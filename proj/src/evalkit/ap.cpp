#include "ird/evalkit/ap.hpp"

#include <algorithm>
#include <numeric>

#include "ird/detstub/detector.hpp"

namespace ird::eval {

std::vector<bool> greedy_match(const std::vector<PredictionRecord>& preds, const std::vector<GtPair>& gts) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<bool> claimed(gts.size(), false);
  std::vector<bool> tp(preds.size(), false);
  for (std::size_t i : order) {
    const auto& p = preds[i];
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g] || gts[g].image_id != p.image_id) continue;
      const double hi = det::iou(p.human, gts[g].human);
      const double oi = det::iou(p.object, gts[g].object);
      if (hi <= kMatchIou || oi <= kMatchIou) continue;
      const double m = std::min(hi, oi);
      if (best < 0 || m > best_iou) {
        best = static_cast<int>(g);
        best_iou = m;
      }
    }
    if (best >= 0) {
      claimed[best] = true;
      tp[i] = true;
    }
  }
  return tp;
}

double average_precision(const std::vector<bool>& ranked_tp, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  const std::size_t n = ranked_tp.size();
  std::vector<double> rec(n + 2, 0.0), prec(n + 2, 0.0);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked_tp[i];
    rec[i + 1] = static_cast<double>(tp) / static_cast<double>(n_gt);
    prec[i + 1] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  rec[n + 1] = 1.0;
  prec[n + 1] = 0.0;
  for (std::size_t i = n + 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) ap += (rec[i + 1] - rec[i]) * prec[i + 1];
  return ap;
}

std::optional<double> match_and_ap(const std::vector<PredictionRecord>& preds, const std::vector<GtPair>& gts) {
  if (gts.empty()) return preds.empty() ? std::nullopt : std::optional<double>(0.0);
  const auto tp = greedy_match(preds, gts);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<bool> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.push_back(tp[i]);
  return average_precision(ranked, gts.size());
}

std::map<int, std::vector<GtPair>> gt_pairs_by_class(const world::WorldSpec& spec,
                                                     const std::vector<world::SynthImage>& images) {
  std::map<int, std::vector<GtPair>> out;
  for (const auto& img : images) {
    for (const auto& inst : img.instances) {
      for (int r : inst.relations) {
        const int c = spec.class_id(inst.object_class, r);
        if (c >= 0) out[c].push_back({img.id, inst.human, inst.object});
      }
    }
  }
  return out;
}

std::map<int, std::optional<double>> per_class_ap(const world::WorldSpec& spec,
                                                  const std::vector<PredictionRecord>& preds,
                                                  const std::vector<world::SynthImage>& images,
                                                  const std::vector<int>& class_ids) {
  const auto gts = gt_pairs_by_class(spec, images);
  std::map<int, std::vector<PredictionRecord>> by_class;
  for (const auto& p : preds) {
    const int c = spec.class_id(p.object_class, p.relation);
    if (c >= 0) by_class[c].push_back(p);
  }
  static const std::vector<GtPair> kNone;
  static const std::vector<PredictionRecord> kNoPreds;
  std::map<int, std::optional<double>> out;
  for (int c : class_ids) {
    auto g = gts.find(c);
    auto p = by_class.find(c);
    out[c] = match_and_ap(p == by_class.end() ? kNoPreds : p->second, g == gts.end() ? kNone : g->second);
  }
  return out;
}

}  // namespace ird::eval
