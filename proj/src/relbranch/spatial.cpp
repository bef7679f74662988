#include "ird/relbranch/spatial.hpp"

#include <algorithm>
#include <cmath>

#include "ird/detstub/detector.hpp"

namespace ird::rel {

std::array<double, kSpatialDim> spatial_encoding(const world::Box& h, const world::Box& o) {
  constexpr double kTiny = 1e-6;
  const double hw = std::max(h.width(), kTiny);
  const double hh = std::max(h.height(), kTiny);
  const double ow = std::max(o.width(), kTiny);
  const double oh = std::max(o.height(), kTiny);
  const world::Box u{std::min(h.x1, o.x1), std::min(h.y1, o.y1), std::max(h.x2, o.x2), std::max(h.y2, o.y2)};
  return {h.cx(), h.cy(), hw, hh,
          o.cx(), o.cy(), ow, oh,
          (o.cx() - h.cx()) / hw, (o.cy() - h.cy()) / hh,
          std::log((ow * oh) / (hw * hh)),
          det::iou(h, o),
          u.cx(), u.cy(), u.width(), u.height()};
}

}  // namespace ird::rel
