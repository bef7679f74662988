#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ird/common/rng.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::world {

// Detection category used for people; object categories are 0..n_objects-1.
inline constexpr int kHuman = -1;

struct HoiClass {
  int object = 0;
  int relation = 0;
  auto operator<=>(const HoiClass&) const = default;
};

// Axis-aligned box in unit image coordinates.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
  bool well_formed() const { return x1 < x2 && y1 < y2; }
  bool inside_unit() const { return x1 >= 0 && y1 >= 0 && x2 <= 1 && y2 <= 1; }
  friend bool operator==(const Box&, const Box&) = default;
};

// Static description of a synthetic HOI world. Everything random about the
// world (signatures, projections, geometry) is derived from `seed`.
struct WorldSpec {
  int n_objects = 8;
  int n_relations = 6;
  std::vector<HoiClass> classes;
  std::vector<double> class_weights;  // train-split sampling weight per class
  // Relation groups emitted together, restricted to the partners valid for
  // the object.
  std::vector<std::vector<int>> cooccurrence;

  std::size_t signal_dim = 8;
  std::size_t nuisance_dim = 8;
  std::size_t latent_dim = 8;
  std::size_t global_dim = 8;

  double onehot_noise = 0.1;
  double signal_noise = 0.1;
  double nuisance_noise = 0.02;
  double nuisance_gain = 1.5;
  double box_noise = 0.01;
  double extra_label_prob = 0.15;

  std::uint64_t seed = 1;

  // Throws InvalidInput with the first problem found.
  void validate() const;

  // Index of (object, relation) in `classes`, or -1.
  int class_id(int object, int relation) const;
  int class_id(const HoiClass& c) const { return class_id(c.object, c.relation); }

  // Detection feature layout: [one-hot over objects + human | signal | nuisance].
  std::size_t onehot_dim() const { return static_cast<std::size_t>(n_objects) + 1; }
  std::size_t feature_dim() const { return onehot_dim() + signal_dim + nuisance_dim; }
};

// 8 objects, 6 relations, 20 classes, one co-occurrence group and three
// low-weight classes that end up Rare in a 2000-image training split.
WorldSpec default_world_spec(std::uint64_t seed = 1);

// Flat `key = value` config file; `#` starts a comment.
WorldSpec read_world_spec(std::istream& is);
void write_world_spec(std::ostream& os, const WorldSpec& spec);

// Relative placement of the object box w.r.t. the human box for a relation,
// in units of human width/height, plus an object size multiplier.
struct RelationGeometry {
  double dx = 0;
  double dy = 0;
  double scale = 1;
};

// A WorldSpec plus the fixed random structures derived from its seed.
class World {
 public:
  explicit World(WorldSpec spec);

  const WorldSpec& spec() const { return spec_; }

  std::span<const double> object_signature(int relation) const;
  std::span<const double> human_signature(int relation) const;
  const num::Tensor& object_nuisance(int object) const { return obj_nuisance_[object]; }
  const num::Tensor& human_nuisance(int object) const { return hum_nuisance_[object]; }
  const num::Tensor& global_projection() const { return global_proj_; }
  const RelationGeometry& geometry(int relation) const { return geometry_[relation]; }
  double object_width(int object) const { return object_size_[object].first; }
  double object_height(int object) const { return object_size_[object].second; }

  // Relations valid for the object.
  const std::vector<int>& relations_of(int object) const { return relations_of_[object]; }
  // Label set emitted when `relation` is drawn for `object`: the relation plus
  // every co-occurrence partner that is valid for the object. Sorted.
  std::vector<int> label_closure(int object, int relation) const;

 private:
  WorldSpec spec_;
  num::Tensor obj_sig_;  // [n_relations, signal_dim]
  num::Tensor hum_sig_;
  std::vector<num::Tensor> obj_nuisance_;  // per object [nuisance_dim, signal_dim]
  std::vector<num::Tensor> hum_nuisance_;
  num::Tensor global_proj_;  // [global_dim, latent_dim]
  std::vector<RelationGeometry> geometry_;
  std::vector<std::pair<double, double>> object_size_;
  std::vector<std::vector<int>> relations_of_;
};

}  // namespace ird::world
