#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ird/common/rng.hpp"
#include "ird/synthworld/world.hpp"

namespace ird::world {

struct GtInstance {
  Box human;
  Box object;
  int object_class = 0;
  std::vector<int> relations;  // sorted, unique, nonempty

  friend bool operator==(const GtInstance&, const GtInstance&) = default;
};

struct SynthImage {
  int id = 0;
  std::uint64_t feature_seed = 0;  // drives per-instance appearance noise
  std::vector<double> latent;      // scene vector behind the global feature
  std::vector<GtInstance> instances;

  friend bool operator==(const SynthImage&, const SynthImage&) = default;
};

enum class Split { Train, Test };

// Train images draw each instance's primary class from the class weights.
// Test images cycle through every class so each one is covered evenly,
// including classes no training phase will ever label.
std::vector<SynthImage> generate_dataset(const World& world, std::size_t n_images, Split split);

struct InstanceFeatures {
  std::vector<double> human;
  std::vector<double> object;
};

// Appearance features of one instance. Relation-signal channels are a sum of
// per-relation signatures shared by every object; nuisance channels are an
// object-specific projection of that same signal.
InstanceFeatures instance_features(const World& world, const GtInstance& inst, Rng& rng);
// Same, with the noise stream derived from the image's feature seed.
InstanceFeatures instance_features(const World& world, const SynthImage& image, std::size_t instance);

// Global image feature: fixed projection of the latent scene vector.
std::vector<double> global_feature(const World& world, const SynthImage& image);

// Feature vector for a detection that belongs to no instance.
std::vector<double> background_features(const World& world, int category, Rng& rng);

// Number of instances carrying each class label, indexed by class id.
std::vector<std::size_t> class_label_counts(const World& world, const std::vector<SynthImage>& images);

// Line-delimited dataset file, one image per line:
//   <id> <feature_seed> <n_latent> <latent...> <n_instances>
//   then per instance: <hx1 hy1 hx2 hy2> <ox1 oy1 ox2 oy2> <object> <n_rel> <rel...>
// Doubles are written with 17 significant digits so the round trip is exact.
void write_dataset(std::ostream& os, const std::vector<SynthImage>& images);
std::vector<SynthImage> read_dataset(std::istream& is);
void save_dataset(const std::filesystem::path& path, const std::vector<SynthImage>& images);
std::vector<SynthImage> load_dataset(const std::filesystem::path& path);

}  // namespace ird::world
