#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ird/evalkit/aggregate.hpp"
#include "ird/runner/experiment.hpp"

namespace ird::run {

// Final-phase view of one run, enough to compare and aggregate runs.
struct RunSummary {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t plan_checksum = 0;
  std::string digest;
  eval::EvalReport final_report;
};

RunSummary summarize(const ExperimentConfig& cfg, const ExperimentResult& res);
RunSummary load_run(const std::filesystem::path& run_dir);

// Summary metrics in table order: old, full, rare, non_rare, rid, uc.
const std::vector<std::string>& summary_metrics();
eval::Metric summary_metric(const eval::EvalReport& r, const std::string& name);

struct MetricComparison {
  std::string metric;
  std::vector<int> signs;  // per seed: +1 (A higher), -1, 0; 0 also when either side is absent
  std::vector<bool> defined;
  int wins = 0, losses = 0, ties = 0, missing = 0;
};

struct Comparison {
  std::size_t seeds = 0;
  std::vector<MetricComparison> metrics;
  const MetricComparison& at(const std::string& metric) const;
};

// Runs are paired by position; each pair must share seed and plan, else
// InvalidInput.
Comparison compare(const std::vector<RunSummary>& a, const std::vector<RunSummary>& b);
void write_comparison(std::ostream& os, const Comparison& c);

struct MetricStats {
  std::string metric;
  std::size_t n = 0;  // runs where the metric is defined
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for n < 2
};

std::vector<MetricStats> batch_stats(const std::vector<RunSummary>& runs);
void write_batch_csv(std::ostream& os, const std::vector<MetricStats>& stats);

}  // namespace ird::run
