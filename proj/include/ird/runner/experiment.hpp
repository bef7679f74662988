#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ird/curriculum/plan.hpp"
#include "ird/distillcore/dictionary.hpp"
#include "ird/distillcore/teacher.hpp"
#include "ird/distillcore/total_loss.hpp"
#include "ird/evalkit/aggregate.hpp"
#include "ird/relbranch/candidates.hpp"
#include "ird/runner/config.hpp"

namespace ird::run {

world::WorldSpec world_spec_for(const ExperimentConfig& cfg);

// Everything that stays fixed across the phases of one experiment.
struct ExperimentData {
  world::World world;
  std::vector<world::SynthImage> train;
  std::vector<world::SynthImage> test;
  cur::PhasePlan base_plan;  // the incremental split
  cur::PhasePlan plan;       // what is trained: base_plan, or its joint view
  std::vector<int> c_test;
  std::vector<std::size_t> train_counts;
  std::vector<rel::ImagePairs> train_pairs;  // indexed by image id
  std::vector<rel::ImagePairs> test_pairs;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

// State handed from one phase to the next.
struct CarriedState {
  rel::RelationBranch model;
  std::optional<rel::RelationBranch> previous;  // frozen end of phase t-1
  distill::MomentumTeacher teacher;
  distill::ConceptDictionary dictionary;
  std::vector<eval::Metric> rid_history;
};

CarriedState initial_state(const ExperimentConfig& cfg, const ExperimentData& data);

struct EpochLog {
  int phase = 0;
  int epoch = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  double rel = 0.0, cdd = 0.0, mfd = 0.0, cfd = 0.0, total = 0.0;  // means per step
};

struct StepInfo {
  int phase;
  int epoch;
  std::size_t step;
  const distill::LossTerms& terms;
  const CarriedState& state;
};

using StepObserver = std::function<void(const StepInfo&)>;

// One training phase: grow heads, train, evaluate. Updates `state` in place
// and appends per-epoch logs.
eval::EvalReport run_phase(const ExperimentConfig& cfg, const ExperimentData& data, int t, CarriedState& state,
                           std::vector<EpochLog>& log, const StepObserver& observer = {});

// Evaluate a model on the test split as phase t of the trained plan.
eval::EvalReport evaluate(const ExperimentConfig& cfg, const ExperimentData& data, const rel::RelationBranch& model,
                          int t, std::span<const eval::Metric> previous_rid);

struct ExperimentResult {
  std::vector<eval::EvalReport> reports;
  std::vector<EpochLog> log;
  std::string digest;
  std::filesystem::path run_dir;  // empty when artifacts are off
  std::uint64_t plan_checksum = 0;
};

// Runs all phases. With save_artifacts, writes everything under
// out_dir/<config hash>/ including partial results if a phase fails.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const StepObserver& observer = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                const StepObserver& observer = {});

std::string report_digest(const std::vector<eval::EvalReport>& reports, const std::vector<world::HoiClass>& table);
std::filesystem::path run_directory(const ExperimentConfig& cfg);

}  // namespace ird::run
