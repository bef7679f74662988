#include "ird/runner/compare.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ird/common/errors.hpp"
#include "ird/evalkit/report_io.hpp"

namespace ird::run {

const std::vector<std::string>& summary_metrics() {
  static const std::vector<std::string> m = {"old", "full", "rare", "non_rare", "rid", "uc"};
  return m;
}

eval::Metric summary_metric(const eval::EvalReport& r, const std::string& name) {
  if (name == "old") return r.old_map;
  if (name == "full") return r.full;
  if (name == "rare") return r.rare;
  if (name == "non_rare") return r.non_rare;
  if (name == "rid") return r.rid;
  if (name == "uc") return r.uc;
  throw InvalidInput("unknown metric '" + name + "'");
}

RunSummary summarize(const ExperimentConfig& cfg, const ExperimentResult& res) {
  if (res.reports.empty()) throw InvalidInput("summarize: run has no reports");
  return {to_string(cfg.mode), cfg.plan_seed, res.plan_checksum, res.digest, res.reports.back()};
}

RunSummary load_run(const std::filesystem::path& run_dir) {
  std::ifstream man(run_dir / "run.txt");
  if (!man) throw RuntimeFailure("no run.txt in " + run_dir.string());
  RunSummary s;
  int phases = 0;
  std::string key, value;
  while (man >> key >> value) {
    if (key == "mode") s.mode = value;
    if (key == "seed") s.seed = std::stoull(value);
    if (key == "plan_checksum") s.plan_checksum = std::stoull(value, nullptr, 16);
    if (key == "phases") phases = std::stoi(value);
    if (key == "digest") s.digest = value;
  }
  if (phases < 1) throw RuntimeFailure("run " + run_dir.string() + " has no completed phase");
  std::ifstream rep(run_dir / ("report_phase" + std::to_string(phases) + ".txt"));
  if (!rep) throw RuntimeFailure("missing final report in " + run_dir.string());
  s.final_report = eval::read_report(rep);
  return s;
}

const MetricComparison& Comparison::at(const std::string& metric) const {
  for (const auto& m : metrics) {
    if (m.metric == metric) return m;
  }
  throw InvalidInput("comparison has no metric '" + metric + "'");
}

Comparison compare(const std::vector<RunSummary>& a, const std::vector<RunSummary>& b) {
  if (a.size() != b.size()) throw InvalidInput("compare: run sets differ in size");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].seed != b[i].seed) throw InvalidInput("compare: seed mismatch at position " + std::to_string(i));
    if (a[i].plan_checksum != b[i].plan_checksum) {
      throw InvalidInput("compare: runs at position " + std::to_string(i) + " used different phase plans");
    }
  }
  Comparison c;
  c.seeds = a.size();
  for (const auto& name : summary_metrics()) {
    MetricComparison mc;
    mc.metric = name;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto va = summary_metric(a[i].final_report, name);
      const auto vb = summary_metric(b[i].final_report, name);
      if (!va || !vb) {
        mc.signs.push_back(0);
        mc.defined.push_back(false);
        ++mc.missing;
        continue;
      }
      const int s = *va > *vb ? 1 : (*va < *vb ? -1 : 0);
      mc.signs.push_back(s);
      mc.defined.push_back(true);
      (s > 0 ? mc.wins : s < 0 ? mc.losses : mc.ties)++;
    }
    c.metrics.push_back(std::move(mc));
  }
  return c;
}

void write_comparison(std::ostream& os, const Comparison& c) {
  os << "metric,wins,losses,ties,missing,signs\n";
  for (const auto& m : c.metrics) {
    os << m.metric << ',' << m.wins << ',' << m.losses << ',' << m.ties << ',' << m.missing << ',';
    for (std::size_t i = 0; i < m.signs.size(); ++i) {
      os << (i ? " " : "") << (!m.defined[i] ? "NA" : m.signs[i] > 0 ? "+" : m.signs[i] < 0 ? "-" : "=");
    }
    os << '\n';
  }
}

std::vector<MetricStats> batch_stats(const std::vector<RunSummary>& runs) {
  std::vector<MetricStats> out;
  for (const auto& name : summary_metrics()) {
    std::vector<double> v;
    for (const auto& r : runs) {
      if (auto m = summary_metric(r.final_report, name)) v.push_back(*m);
    }
    MetricStats s;
    s.metric = name;
    s.n = v.size();
    if (!v.empty()) {
      for (double x : v) s.mean += x;
      s.mean /= static_cast<double>(v.size());
      if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
    }
    out.push_back(s);
  }
  return out;
}

void write_batch_csv(std::ostream& os, const std::vector<MetricStats>& stats) {
  const auto old = os.precision(10);
  os << "metric,n,mean,std\n";
  for (const auto& s : stats) {
    os << s.metric << ',' << s.n << ',';
    if (s.n > 0) os << s.mean << ',' << s.stddev;
    else os << ',';
    os << '\n';
  }
  os.precision(old);
}

}  // namespace ird::run
