#pragma once

#include <array>
#include <cstddef>

#include "ird/synthworld/world.hpp"

namespace ird::rel {

inline constexpr std::size_t kSpatialDim = 16;

// Layout:
//   0-3   human cx, cy, w, h
//   4-7   object cx, cy, w, h
//   8-9   object-minus-human center offset in human widths/heights
//   10    log(object area / human area)
//   11    IoU(human, object)
//   12-15 union box cx, cy, w, h
// Only entries 0,1,4,5,12,13 move when both boxes are translated together.
std::array<double, kSpatialDim> spatial_encoding(const world::Box& human, const world::Box& object);

}  // namespace ird::rel
