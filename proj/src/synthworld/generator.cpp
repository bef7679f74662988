#include <algorithm>
#include <cmath>
#include <numeric>

#include "ird/common/errors.hpp"
#include "ird/synthworld/dataset.hpp"

namespace ird::world {
namespace {

constexpr int kColumns = 3;

Box clamp_box(double cx, double cy, double w, double h) {
  Box b{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  b.x1 = std::clamp(b.x1, 0.0, 0.98);
  b.y1 = std::clamp(b.y1, 0.0, 0.98);
  b.x2 = std::clamp(b.x2, b.x1 + 0.02, 1.0);
  b.y2 = std::clamp(b.y2, b.y1 + 0.02, 1.0);
  return b;
}

GtInstance place_instance(const World& world, int object, std::vector<int> relations, int column, Rng& rng) {
  const WorldSpec& spec = world.spec();
  GtInstance inst;
  inst.object_class = object;
  inst.relations = std::move(relations);

  const double col_center = (static_cast<double>(column) + 0.5) / kColumns;
  const double hw = 0.08 + 0.04 * uniform01(rng);
  const double hh = 0.20 + 0.10 * uniform01(rng);
  const double hcx = col_center + 0.06 * (uniform01(rng) - 0.5);
  const double hcy = 0.35 + 0.30 * uniform01(rng);
  inst.human = clamp_box(hcx, hcy, hw, hh);

  double dx = 0, dy = 0, sc = 0;
  for (int r : inst.relations) {
    dx += world.geometry(r).dx;
    dy += world.geometry(r).dy;
    sc += world.geometry(r).scale;
  }
  const double k = static_cast<double>(inst.relations.size());
  dx /= k;
  dy /= k;
  sc /= k;
  const double ocx = hcx + dx * hw + normal(rng, spec.box_noise);
  const double ocy = hcy + dy * hh + normal(rng, spec.box_noise);
  const double ow = world.object_width(object) * sc * (0.9 + 0.2 * uniform01(rng));
  const double oh = world.object_height(object) * sc * (0.9 + 0.2 * uniform01(rng));
  inst.object = clamp_box(ocx, ocy, ow, oh);
  return inst;
}

std::vector<int> draw_labels(const World& world, const HoiClass& primary, Rng& rng) {
  std::vector<int> labels = world.label_closure(primary.object, primary.relation);
  const auto& valid = world.relations_of(primary.object);
  if (uniform01(rng) < world.spec().extra_label_prob && valid.size() > labels.size()) {
    // Extra relation drawn by class weight so rare classes stay rare.
    std::vector<int> rest;
    std::vector<double> w;
    for (int r : valid) {
      if (std::binary_search(labels.begin(), labels.end(), r)) continue;
      rest.push_back(r);
      w.push_back(world.spec().class_weights[world.spec().class_id(primary.object, r)]);
    }
    const int extra = rest[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)];
    for (int r : world.label_closure(primary.object, extra)) labels.push_back(r);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  return labels;
}

void add_noise(std::vector<double>& v, std::size_t begin, std::size_t end, double sd, Rng& rng) {
  if (sd == 0.0) return;
  for (std::size_t i = begin; i < end; ++i) v[i] += normal(rng, sd);
}

}  // namespace

std::vector<SynthImage> generate_dataset(const World& world, std::size_t n_images, Split split) {
  const WorldSpec& spec = world.spec();
  if (n_images == 0) throw InvalidInput("generate_dataset: n_images must be positive");
  if (spec.classes.empty()) throw InvalidInput("generate_dataset: world has no HOI classes");

  const std::uint64_t split_tag = split == Split::Train ? tag("train") : tag("test");
  Rng rng(derive_seed(spec.seed, split_tag));

  std::vector<int> counts(n_images);
  for (int& c : counts) c = 1 + static_cast<int>(uniform_index(rng, kColumns));
  const std::size_t total = static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0));

  std::vector<std::size_t> primaries(total);
  if (split == Split::Train) {
    std::discrete_distribution<std::size_t> pick(spec.class_weights.begin(), spec.class_weights.end());
    for (auto& p : primaries) p = pick(rng);
  } else {
    for (std::size_t i = 0; i < total; ++i) primaries[i] = i % spec.classes.size();
    std::shuffle(primaries.begin(), primaries.end(), rng);
  }

  std::vector<SynthImage> images;
  images.reserve(n_images);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n_images; ++i) {
    SynthImage img;
    img.id = static_cast<int>(i);
    img.feature_seed = derive_seed(spec.seed, split_tag, i);
    img.latent.resize(spec.latent_dim);
    for (double& v : img.latent) v = normal(rng);
    std::vector<int> columns(kColumns);
    std::iota(columns.begin(), columns.end(), 0);
    std::shuffle(columns.begin(), columns.end(), rng);
    for (int k = 0; k < counts[i]; ++k) {
      const HoiClass& primary = spec.classes[primaries[next++]];
      auto labels = draw_labels(world, primary, rng);
      img.instances.push_back(place_instance(world, primary.object, std::move(labels), columns[k], rng));
    }
    images.push_back(std::move(img));
  }
  return images;
}

InstanceFeatures instance_features(const World& world, const GtInstance& inst, Rng& rng) {
  const WorldSpec& spec = world.spec();
  const std::size_t oh = spec.onehot_dim();
  const std::size_t sd = spec.signal_dim;
  const std::size_t nd = spec.nuisance_dim;

  auto build = [&](std::size_t slot, auto signature, const num::Tensor& projection) {
    std::vector<double> f(spec.feature_dim(), 0.0);
    f[slot] = 1.0;
    add_noise(f, 0, oh, spec.onehot_noise, rng);
    std::vector<double> signal(sd, 0.0);
    for (int r : inst.relations) {
      auto s = signature(r);
      for (std::size_t i = 0; i < sd; ++i) signal[i] += s[i];
    }
    for (std::size_t i = 0; i < sd; ++i) f[oh + i] = signal[i];
    add_noise(f, oh, oh + sd, spec.signal_noise, rng);
    for (std::size_t u = 0; u < nd; ++u) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sd; ++i) acc += projection.at(u, i) * signal[i];
      f[oh + sd + u] = spec.nuisance_gain * acc;
    }
    add_noise(f, oh + sd, oh + sd + nd, spec.nuisance_noise, rng);
    return f;
  };

  InstanceFeatures out;
  out.human = build(static_cast<std::size_t>(spec.n_objects),
                    [&](int r) { return world.human_signature(r); }, world.human_nuisance(inst.object_class));
  out.object = build(static_cast<std::size_t>(inst.object_class),
                     [&](int r) { return world.object_signature(r); }, world.object_nuisance(inst.object_class));
  return out;
}

InstanceFeatures instance_features(const World& world, const SynthImage& image, std::size_t instance) {
  Rng rng(derive_seed(image.feature_seed, instance));
  return instance_features(world, image.instances.at(instance), rng);
}

std::vector<double> global_feature(const World& world, const SynthImage& image) {
  const num::Tensor& p = world.global_projection();
  if (image.latent.size() != p.cols()) throw InvalidInput("global_feature: latent dimension mismatch");
  std::vector<double> g(p.rows(), 0.0);
  for (std::size_t r = 0; r < p.rows(); ++r) g[r] = num::dot(p.row(r), image.latent);
  return g;
}

std::vector<double> background_features(const World& world, int category, Rng& rng) {
  const WorldSpec& spec = world.spec();
  std::vector<double> f(spec.feature_dim(), 0.0);
  const std::size_t slot = category == kHuman ? static_cast<std::size_t>(spec.n_objects)
                                              : static_cast<std::size_t>(category);
  f[slot] = 1.0;
  add_noise(f, 0, spec.onehot_dim(), spec.onehot_noise, rng);
  const std::size_t oh = spec.onehot_dim();
  add_noise(f, oh, oh + spec.signal_dim, spec.signal_noise, rng);
  add_noise(f, oh + spec.signal_dim, spec.feature_dim(), spec.nuisance_noise, rng);
  return f;
}

std::vector<std::size_t> class_label_counts(const World& world, const std::vector<SynthImage>& images) {
  const WorldSpec& spec = world.spec();
  std::vector<std::size_t> counts(spec.classes.size(), 0);
  for (const auto& img : images) {
    for (const auto& inst : img.instances) {
      for (int r : inst.relations) {
        const int c = spec.class_id(inst.object_class, r);
        if (c >= 0) ++counts[static_cast<std::size_t>(c)];
      }
    }
  }
  return counts;
}

}  // namespace ird::world
