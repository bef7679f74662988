#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ird/synthworld/dataset.hpp"
#include "ird/synthworld/world.hpp"

namespace ird::cur {

// T-way partition of the trained HOI classes and of the training images.
// Phases are 1-based in every accessor taking `t`.
struct PhasePlan {
  int phase_count = 1;
  std::uint64_t seed = 0;
  std::vector<world::HoiClass> class_table;      // class id -> (object, relation)
  std::vector<std::vector<int>> classes;         // per phase, sorted class ids
  std::vector<std::vector<int>> images;          // per phase, sorted train image ids
  std::vector<int> holdout;                      // classes no phase trains on

  const std::vector<int>& phase_classes(int t) const;
  const std::vector<int>& phase_images(int t) const;
  // Phase (1-based) that trains the class, or 0 when it is never trained.
  int phase_of(int class_id) const;

  std::vector<int> seen_classes(int t) const;    // C_{1:t}, sorted
  std::vector<int> seen_objects(int t) const;    // O_{1:t}
  std::vector<int> seen_relations(int t) const;  // R_{1:t}
  std::vector<int> phase_relations(int t) const; // relations of C_t
  // Relations first introduced at phase t, in ascending id order.
  std::vector<int> new_relations(int t) const;

  friend bool operator==(const PhasePlan&, const PhasePlan&) = default;
};

struct PlanOptions {
  int phase_count = 3;
  std::uint64_t seed = 1;
  std::size_t holdout_count = 2;  // zero-shot classes kept out of training
  int max_attempts = 2000;
};

// Randomized construction. Every object and relation gets an introduction
// phase and a class trains at the later of its two; an attempt is kept when
// each introduction is realized by some class, every phase has a fair share
// of classes and (given images) every trained class has training data.
// Relations in a co-occurrence group share an introduction phase.
// Throws InvalidInput naming the blocking classes when no attempt succeeds.
PhasePlan build_plan(const world::WorldSpec& spec, const std::vector<world::SynthImage>& train,
                     const PlanOptions& opts);

// Plan from explicit class phases (phase_of_class[c] in 1..T, or 0 for
// holdout). Images go to the earliest phase they can supervise.
PhasePlan assign_plan(const world::WorldSpec& spec, const std::vector<world::SynthImage>& train,
                      const std::vector<int>& phase_of_class, int phase_count, std::uint64_t seed = 0);

enum class ViolationKind { Structure, Disjointness, Novelty, AnnotationLeak };

struct Violation {
  ViolationKind kind;
  std::string message;
};

std::string to_string(ViolationKind k);

// Empty result means the plan is valid. With images, also checks that each
// phase image can supervise its phase and that the phase annotations carry
// no label outside C_t.
std::vector<Violation> validate_plan(const PhasePlan& plan, const world::WorldSpec& spec,
                                     const std::vector<world::SynthImage>* train = nullptr);

// Old classes whose relation recurs in phase t. Empty for t == 1.
std::vector<int> rid_set(const PhasePlan& plan, int t);
// Classes of c_test whose object and relation were both seen by phase t but
// never together in a trained class.
std::vector<int> uc_set(const PhasePlan& plan, int t, const std::vector<int>& c_test);
// Class ids that occur in a set of (test) images.
std::vector<int> classes_present(const world::WorldSpec& spec, const std::vector<world::SynthImage>& images);

// Phase-t view of one training image: relation labels restricted to C_t.
// `ignored` holds, per instance, the true relations that were stripped.
struct PhaseImage {
  world::SynthImage image;
  std::vector<std::vector<int>> ignored;
};

PhaseImage phase_view(const PhasePlan& plan, const world::SynthImage& image, int t);
// Annotated training set of phase t, in image-id order. `train` is indexed
// by image id.
std::vector<PhaseImage> phase_dataset(const PhasePlan& plan, const std::vector<world::SynthImage>& train, int t);
// Single-phase view over every trained class (joint training).
PhasePlan joint_plan(const PhasePlan& plan);

// Training instances per class id under the plan's phase annotations.
std::vector<std::size_t> training_counts(const PhasePlan& plan, const std::vector<world::SynthImage>& train);

struct PhaseStats {
  int phase = 0;
  std::size_t hoi = 0, relations = 0, objects = 0, images = 0, drift = 0, unseen = 0;
};

std::vector<PhaseStats> plan_stats(const PhasePlan& plan, const std::vector<int>& c_test);

// Plan file: per-phase class and image lists plus a checksum over the body.
void write_plan(std::ostream& os, const PhasePlan& plan);
PhasePlan read_plan(std::istream& is);
void save_plan(const std::string& path, const PhasePlan& plan);
PhasePlan load_plan(const std::string& path);
std::uint64_t plan_checksum(const PhasePlan& plan);

}  // namespace ird::cur
