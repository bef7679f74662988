#include "ird/curriculum/plan.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ird/common/errors.hpp"

namespace ird::cur {
namespace {

std::string class_name(const PhasePlan& plan, int c) {
  if (c < 0 || c >= static_cast<int>(plan.class_table.size())) return "#" + std::to_string(c);
  const auto& h = plan.class_table[c];
  return "(" + std::to_string(h.object) + "," + std::to_string(h.relation) + ")";
}

void check_phase(const PhasePlan& plan, int t) {
  if (t < 1 || t > plan.phase_count) {
    throw InvalidInput("phase " + std::to_string(t) + " outside 1.." + std::to_string(plan.phase_count));
  }
}

template <class F>
std::vector<int> collect(const PhasePlan& plan, int first, int last, F key) {
  std::set<int> out;
  for (int t = first; t <= last; ++t) {
    for (int c : plan.classes[t - 1]) out.insert(key(plan.class_table[c]));
  }
  return {out.begin(), out.end()};
}

bool contains(const std::vector<int>& sorted, int v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

// Phase ids (1-based, nonzero) an image can supervise, from its true labels.
std::set<int> supervisable_phases(const world::WorldSpec& spec, const std::vector<int>& phase_of_class,
                                  const world::SynthImage& img) {
  std::set<int> phases;
  for (const auto& inst : img.instances) {
    for (int r : inst.relations) {
      const int c = spec.class_id(inst.object_class, r);
      if (c >= 0 && phase_of_class[c] > 0) phases.insert(phase_of_class[c]);
    }
  }
  return phases;
}

void check_ids(const std::vector<world::SynthImage>& train) {
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].id != static_cast<int>(i)) throw InvalidInput("plan: training image ids must equal their index");
  }
}

}  // namespace

const std::vector<int>& PhasePlan::phase_classes(int t) const {
  check_phase(*this, t);
  return classes[t - 1];
}

const std::vector<int>& PhasePlan::phase_images(int t) const {
  check_phase(*this, t);
  return images[t - 1];
}

int PhasePlan::phase_of(int class_id) const {
  for (int t = 1; t <= phase_count; ++t) {
    if (contains(classes[t - 1], class_id)) return t;
  }
  return 0;
}

std::vector<int> PhasePlan::seen_classes(int t) const {
  if (t == 0) return {};
  check_phase(*this, t);
  std::vector<int> out;
  for (int k = 1; k <= t; ++k) out.insert(out.end(), classes[k - 1].begin(), classes[k - 1].end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> PhasePlan::seen_objects(int t) const {
  if (t == 0) return {};
  check_phase(*this, t);
  return collect(*this, 1, t, [](const world::HoiClass& h) { return h.object; });
}

std::vector<int> PhasePlan::seen_relations(int t) const {
  if (t == 0) return {};
  check_phase(*this, t);
  return collect(*this, 1, t, [](const world::HoiClass& h) { return h.relation; });
}

std::vector<int> PhasePlan::phase_relations(int t) const {
  check_phase(*this, t);
  return collect(*this, t, t, [](const world::HoiClass& h) { return h.relation; });
}

std::vector<int> PhasePlan::new_relations(int t) const {
  const auto before = seen_relations(t - 1);
  std::vector<int> out;
  for (int r : phase_relations(t)) {
    if (!contains(before, r)) out.push_back(r);
  }
  return out;
}

PhasePlan assign_plan(const world::WorldSpec& spec, const std::vector<world::SynthImage>& train,
                      const std::vector<int>& phase_of_class, int phase_count, std::uint64_t seed) {
  if (phase_count < 1) throw InvalidInput("plan: phase count must be at least 1");
  if (phase_of_class.size() != spec.classes.size()) throw InvalidInput("plan: one phase per class required");
  check_ids(train);
  PhasePlan plan;
  plan.phase_count = phase_count;
  plan.seed = seed;
  plan.class_table = spec.classes;
  plan.classes.resize(phase_count);
  plan.images.resize(phase_count);
  for (std::size_t c = 0; c < phase_of_class.size(); ++c) {
    const int t = phase_of_class[c];
    if (t < 0 || t > phase_count) throw InvalidInput("plan: class phase out of range");
    if (t == 0) {
      plan.holdout.push_back(static_cast<int>(c));
    } else {
      plan.classes[t - 1].push_back(static_cast<int>(c));
    }
  }
  for (const auto& img : train) {
    const auto phases = supervisable_phases(spec, phase_of_class, img);
    if (!phases.empty()) plan.images[*phases.begin() - 1].push_back(img.id);
  }
  return plan;
}

PhasePlan build_plan(const world::WorldSpec& spec, const std::vector<world::SynthImage>& train,
                     const PlanOptions& opts) {
  spec.validate();
  const int T = opts.phase_count;
  if (T < 1) throw InvalidInput("plan: phase count must be at least 1");
  if (opts.max_attempts < 1) throw InvalidInput("plan: max_attempts must be positive");
  const std::size_t nc = spec.classes.size();
  Rng rng(derive_seed(opts.seed, tag("phase-plan")));

  std::set<int> grouped;
  for (const auto& g : spec.cooccurrence) grouped.insert(g.begin(), g.end());

  std::string reason;
  std::vector<int> blocking;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    // Holdout: classes whose object and relation stay covered by other
    // trained classes, so they can later be evaluated as unseen combinations.
    std::vector<int> phase(nc, -1);
    std::vector<int> order(nc);
    for (std::size_t c = 0; c < nc; ++c) order[c] = static_cast<int>(c);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t held = 0;
    for (int c : order) {
      if (held == opts.holdout_count) break;
      const auto& h = spec.classes[c];
      if (grouped.count(h.relation)) continue;
      int obj_left = 0, rel_left = 0;
      for (std::size_t k = 0; k < nc; ++k) {
        if (static_cast<int>(k) == c || phase[k] == 0) continue;
        obj_left += spec.classes[k].object == h.object;
        rel_left += spec.classes[k].relation == h.relation;
      }
      if (obj_left >= 2 && rel_left >= 2) {
        phase[c] = 0;
        ++held;
      }
    }

    std::map<int, int> intro_o, intro_r;
    for (std::size_t c = 0; c < nc; ++c) {
      if (phase[c] == 0) continue;
      intro_o.emplace(spec.classes[c].object, 0);
      intro_r.emplace(spec.classes[c].relation, 0);
    }
    auto draw = [&] { return 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(T))); };
    for (auto& [o, p] : intro_o) p = draw();
    for (auto& [r, p] : intro_r) p = draw();
    for (const auto& g : spec.cooccurrence) {
      for (int r : g) {
        if (intro_r.count(r) && intro_r.count(g.front())) intro_r[r] = intro_r[g.front()];
      }
    }
    for (std::size_t c = 0; c < nc; ++c) {
      if (phase[c] != 0) phase[c] = std::max(intro_o[spec.classes[c].object], intro_r[spec.classes[c].relation]);
    }

    // Every introduction must be realized, otherwise a later class would
    // bring nothing new.
    bool ok = true;
    blocking.clear();
    for (const auto& [o, p] : intro_o) {
      bool hit = false;
      for (std::size_t c = 0; c < nc; ++c) hit |= phase[c] == p && spec.classes[c].object == o;
      if (!hit) ok = false;
    }
    for (const auto& [r, p] : intro_r) {
      bool hit = false;
      for (std::size_t c = 0; c < nc; ++c) hit |= phase[c] == p && spec.classes[c].relation == r;
      if (!hit) ok = false;
    }
    if (!ok) {
      reason = "unrealized introductions";
      continue;
    }
    const std::size_t trained = nc - held;
    const std::size_t min_share = std::max<std::size_t>(1, trained / (2 * static_cast<std::size_t>(T)));
    for (int t = 1; t <= T; ++t) {
      const auto n = static_cast<std::size_t>(std::count(phase.begin(), phase.end(), t));
      if (n < min_share) ok = false;
    }
    if (!ok) {
      reason = "phases below " + std::to_string(min_share) + " classes";
      for (std::size_t c = 0; c < nc; ++c) {
        if (phase[c] > 0) blocking.push_back(static_cast<int>(c));
      }
      continue;
    }
    PhasePlan plan = assign_plan(spec, train, phase, T, opts.seed);
    if (!train.empty()) {
      const auto counts = training_counts(plan, train);
      for (std::size_t c = 0; c < nc; ++c) {
        if (phase[c] > 0 && counts[c] == 0) blocking.push_back(static_cast<int>(c));
      }
      if (!blocking.empty()) {
        reason = "classes without training instances";
        continue;
      }
    }
    if (!validate_plan(plan, spec, train.empty() ? nullptr : &train).empty()) {
      reason = "validator rejected the attempt";
      continue;
    }
    return plan;
  }

  std::string msg = "plan: no valid " + std::to_string(T) + "-phase partition after " +
                    std::to_string(opts.max_attempts) + " attempts (" + reason + ")";
  if (!blocking.empty()) {
    msg += "; blocking classes:";
    for (int c : blocking) {
      msg += " (" + std::to_string(spec.classes[c].object) + "," + std::to_string(spec.classes[c].relation) + ")";
    }
  }
  throw InvalidInput(msg);
}

std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Structure: return "structure";
    case ViolationKind::Disjointness: return "disjointness";
    case ViolationKind::Novelty: return "novelty";
    case ViolationKind::AnnotationLeak: return "annotation-leak";
  }
  return "unknown";
}

std::vector<Violation> validate_plan(const PhasePlan& plan, const world::WorldSpec& spec,
                                     const std::vector<world::SynthImage>* train) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, std::string m) { out.push_back({k, std::move(m)}); };
  const int T = plan.phase_count;
  if (T < 1 || plan.classes.size() != static_cast<std::size_t>(T) ||
      plan.images.size() != static_cast<std::size_t>(T)) {
    add(ViolationKind::Structure, "phase count does not match the per-phase lists");
    return out;
  }
  if (plan.class_table != spec.classes) add(ViolationKind::Structure, "class table differs from the world's classes");
  const int nc = static_cast<int>(plan.class_table.size());

  std::map<int, int> class_home;
  for (int c : plan.holdout) {
    if (c < 0 || c >= nc) add(ViolationKind::Structure, "holdout references unknown class " + std::to_string(c));
    class_home[c] = 0;
  }
  for (int t = 1; t <= T; ++t) {
    for (int c : plan.classes[t - 1]) {
      if (c < 0 || c >= nc) {
        add(ViolationKind::Structure, "phase " + std::to_string(t) + " references unknown class " + std::to_string(c));
        continue;
      }
      auto [it, fresh] = class_home.emplace(c, t);
      if (!fresh) {
        add(ViolationKind::Disjointness,
            "class " + class_name(plan, c) + " appears in " +
                (it->second == 0 ? std::string("the holdout") : "phase " + std::to_string(it->second)) +
                " and phase " + std::to_string(t));
      }
    }
  }
  if (!out.empty()) return out;

  std::map<int, int> image_home;
  for (int t = 1; t <= T; ++t) {
    for (int id : plan.images[t - 1]) {
      auto [it, fresh] = image_home.emplace(id, t);
      if (!fresh) {
        add(ViolationKind::Disjointness, "image " + std::to_string(id) + " appears in phases " +
                                             std::to_string(it->second) + " and " + std::to_string(t));
      }
    }
  }

  for (int t = 2; t <= T; ++t) {
    const auto objs = plan.seen_objects(t - 1);
    const auto rels = plan.seen_relations(t - 1);
    for (int c : plan.classes[t - 1]) {
      const auto& h = plan.class_table[c];
      if (contains(objs, h.object) && contains(rels, h.relation)) {
        add(ViolationKind::Novelty, "class " + class_name(plan, c) + " in phase " + std::to_string(t) +
                                        " introduces neither a new object nor a new relation");
      }
    }
  }

  if (train) {
    for (int t = 1; t <= T; ++t) {
      const auto& ct = plan.classes[t - 1];
      for (int id : plan.images[t - 1]) {
        if (id < 0 || id >= static_cast<int>(train->size())) {
          add(ViolationKind::Structure, "phase " + std::to_string(t) + " lists unknown image " + std::to_string(id));
          continue;
        }
        const PhaseImage view = phase_view(plan, (*train)[id], t);
        bool any = false;
        for (const auto& inst : view.image.instances) {
          for (int r : inst.relations) {
            const int c = spec.class_id(inst.object_class, r);
            any = true;
            if (!contains(ct, c)) {
              add(ViolationKind::AnnotationLeak, "image " + std::to_string(id) + " in phase " + std::to_string(t) +
                                                     " carries label " + class_name(plan, c));
            }
          }
        }
        if (!any) {
          add(ViolationKind::Structure,
              "image " + std::to_string(id) + " in phase " + std::to_string(t) + " has no label of that phase");
        }
      }
    }
  }
  return out;
}

std::vector<int> rid_set(const PhasePlan& plan, int t) {
  check_phase(plan, t);
  if (t == 1) return {};
  const auto rels = plan.phase_relations(t);
  std::vector<int> out;
  for (int c : plan.seen_classes(t - 1)) {
    if (contains(rels, plan.class_table[c].relation)) out.push_back(c);
  }
  return out;
}

std::vector<int> uc_set(const PhasePlan& plan, int t, const std::vector<int>& c_test) {
  check_phase(plan, t);
  const auto objs = plan.seen_objects(t);
  const auto rels = plan.seen_relations(t);
  const auto seen = plan.seen_classes(t);
  std::set<int> out;
  for (int c : c_test) {
    if (c < 0 || c >= static_cast<int>(plan.class_table.size())) continue;
    const auto& h = plan.class_table[c];
    if (contains(objs, h.object) && contains(rels, h.relation) && !contains(seen, c)) out.insert(c);
  }
  return {out.begin(), out.end()};
}

std::vector<int> classes_present(const world::WorldSpec& spec, const std::vector<world::SynthImage>& images) {
  std::set<int> out;
  for (const auto& img : images) {
    for (const auto& inst : img.instances) {
      for (int r : inst.relations) {
        const int c = spec.class_id(inst.object_class, r);
        if (c >= 0) out.insert(c);
      }
    }
  }
  return {out.begin(), out.end()};
}

PhaseImage phase_view(const PhasePlan& plan, const world::SynthImage& image, int t) {
  check_phase(plan, t);
  const auto& ct = plan.classes[t - 1];
  PhaseImage out;
  out.image = image;
  out.ignored.resize(image.instances.size());
  for (std::size_t i = 0; i < image.instances.size(); ++i) {
    auto& inst = out.image.instances[i];
    std::vector<int> kept;
    for (int r : inst.relations) {
      const auto it = std::find(plan.class_table.begin(), plan.class_table.end(), world::HoiClass{inst.object_class, r});
      const int c = it == plan.class_table.end() ? -1 : static_cast<int>(it - plan.class_table.begin());
      if (c >= 0 && contains(ct, c)) {
        kept.push_back(r);
      } else {
        out.ignored[i].push_back(r);
      }
    }
    inst.relations = std::move(kept);
  }
  return out;
}

std::vector<PhaseImage> phase_dataset(const PhasePlan& plan, const std::vector<world::SynthImage>& train, int t) {
  std::vector<PhaseImage> out;
  for (int id : plan.phase_images(t)) {
    if (id < 0 || id >= static_cast<int>(train.size()) || train[id].id != id) {
      throw InvalidInput("phase_dataset: image " + std::to_string(id) + " not found in the training set");
    }
    out.push_back(phase_view(plan, train[id], t));
  }
  return out;
}

PhasePlan joint_plan(const PhasePlan& plan) {
  PhasePlan out;
  out.phase_count = 1;
  out.seed = plan.seed;
  out.class_table = plan.class_table;
  out.holdout = plan.holdout;
  out.classes.resize(1);
  out.images.resize(1);
  for (int t = 1; t <= plan.phase_count; ++t) {
    out.classes[0].insert(out.classes[0].end(), plan.classes[t - 1].begin(), plan.classes[t - 1].end());
    out.images[0].insert(out.images[0].end(), plan.images[t - 1].begin(), plan.images[t - 1].end());
  }
  std::sort(out.classes[0].begin(), out.classes[0].end());
  std::sort(out.images[0].begin(), out.images[0].end());
  return out;
}

std::vector<std::size_t> training_counts(const PhasePlan& plan, const std::vector<world::SynthImage>& train) {
  std::vector<std::size_t> counts(plan.class_table.size(), 0);
  for (int t = 1; t <= plan.phase_count; ++t) {
    for (const auto& pi : phase_dataset(plan, train, t)) {
      for (const auto& inst : pi.image.instances) {
        for (int r : inst.relations) {
          const auto it =
              std::find(plan.class_table.begin(), plan.class_table.end(), world::HoiClass{inst.object_class, r});
          ++counts[static_cast<std::size_t>(it - plan.class_table.begin())];
        }
      }
    }
  }
  return counts;
}

std::vector<PhaseStats> plan_stats(const PhasePlan& plan, const std::vector<int>& c_test) {
  std::vector<PhaseStats> out;
  for (int t = 1; t <= plan.phase_count; ++t) {
    PhaseStats s;
    s.phase = t;
    s.hoi = plan.classes[t - 1].size();
    s.relations = plan.phase_relations(t).size();
    s.objects = collect(plan, t, t, [](const world::HoiClass& h) { return h.object; }).size();
    s.images = plan.images[t - 1].size();
    s.drift = rid_set(plan, t).size();
    s.unseen = uc_set(plan, t, c_test).size();
    out.push_back(s);
  }
  return out;
}

}  // namespace ird::cur
