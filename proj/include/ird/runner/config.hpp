#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ird/detstub/detector.hpp"
#include "ird/distillcore/losses.hpp"

namespace ird::run {

enum class Mode { Finetune, CddOnly, CddMfd, CddCfd, IrdFull, Joint };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);
const std::vector<Mode>& all_modes();

struct ExperimentConfig {
  // world and data
  std::string world_spec;  // empty: built-in default world
  std::uint64_t world_seed = 1;
  std::size_t train_images = 2000;
  std::size_t test_images = 600;

  // phase plan
  int phase_count = 3;
  std::uint64_t plan_seed = 1;
  std::size_t holdout = 2;

  det::DetectorConfig detector;

  // relation branch
  std::vector<std::size_t> hidden{64, 64};
  std::size_t feature_dim = 64;
  double eta_init = 10.0;
  double lambda = 0.26;

  // distillation
  distill::LossWeights weights;
  double momentum = 0.999;
  std::size_t queue_capacity = 10;

  // optimizer and schedule
  int epochs = 10;
  double lr = 1e-3;
  int decay_epoch = 7;  // epochs with index >= decay_epoch run at lr * decay_factor
  double decay_factor = 0.1;
  std::size_t batch_size = 8;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool long_schedule = false;  // 25 epochs, lr 1e-4, decay after epoch 17

  Mode mode = Mode::IrdFull;
  std::uint64_t init_seed = 1;
  std::uint64_t data_seed = 1;

  std::size_t top_k = 100;
  std::size_t rare_threshold = 10;

  std::string out_dir = "runs";
  bool save_artifacts = true;

  // Sets one key from its textual value; throws InvalidInput for unknown
  // keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;

  // Canonical "key = value" text in keys() order.
  std::string to_text() const;
  std::uint64_t hash() const;
};

// Flat key-value file; '#' starts a comment. Keys as in ExperimentConfig.
ExperimentConfig read_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

// Same seed for world, plan, init and data order.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

// Loss weights after the mode forces some of them to zero.
distill::LossWeights effective_weights(const ExperimentConfig& cfg);
// Epochs, lr and decay epoch after the long_schedule switch.
struct Schedule {
  int epochs;
  double lr;
  int decay_epoch;
  double decay_factor;
};
Schedule effective_schedule(const ExperimentConfig& cfg);

}  // namespace ird::run
