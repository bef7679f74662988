#include "ird/runner/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "ird/common/errors.hpp"
#include "ird/common/hash.hpp"

namespace ird::run {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof()) throw InvalidInput("config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidInput("config: bad boolean '" + v + "' for " + key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse<T>(k, v); },
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(c.*m);
            } else {
              return std::to_string(c.*m);
            }
          }};
}

template <class T>
Field nested(T ExperimentConfig::*outer, double T::*m) {
  return {[outer, m](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*m = parse<double>(k, v);
          },
          [outer, m](const ExperimentConfig& c) { return fmt(c.*outer.*m); }};
}

const std::vector<std::pair<std::string, Field>>& table() {
  static const std::vector<std::pair<std::string, Field>> t = {
      {"world_spec",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.world_spec = v; },
        [](const ExperimentConfig& c) { return c.world_spec; }}},
      {"world_seed", number(&ExperimentConfig::world_seed)},
      {"train_images", number(&ExperimentConfig::train_images)},
      {"test_images", number(&ExperimentConfig::test_images)},
      {"phase_count", number(&ExperimentConfig::phase_count)},
      {"plan_seed", number(&ExperimentConfig::plan_seed)},
      {"holdout", number(&ExperimentConfig::holdout)},
      {"jitter_scale", nested(&ExperimentConfig::detector, &det::DetectorConfig::jitter_scale)},
      {"spurious_rate", nested(&ExperimentConfig::detector, &det::DetectorConfig::spurious_rate)},
      {"score_threshold", nested(&ExperimentConfig::detector, &det::DetectorConfig::score_threshold)},
      {"nms_iou", nested(&ExperimentConfig::detector, &det::DetectorConfig::nms_iou)},
      {"confidence_decay", nested(&ExperimentConfig::detector, &det::DetectorConfig::confidence_decay)},
      {"detector_seed",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.detector.seed = parse<std::uint64_t>(k, v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.seed); }}},
      {"hidden",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          std::vector<std::size_t> h;
          std::istringstream is(v);
          std::string part;
          while (std::getline(is, part, ',')) {
            if (!trim(part).empty()) h.push_back(parse<std::size_t>(k, trim(part)));
          }
          c.hidden = h;
        },
        [](const ExperimentConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
          return s;
        }}},
      {"feature_dim", number(&ExperimentConfig::feature_dim)},
      {"eta_init", number(&ExperimentConfig::eta_init)},
      {"lambda", number(&ExperimentConfig::lambda)},
      {"alpha0", nested(&ExperimentConfig::weights, &distill::LossWeights::alpha0)},
      {"alpha1", nested(&ExperimentConfig::weights, &distill::LossWeights::alpha1)},
      {"alpha2", nested(&ExperimentConfig::weights, &distill::LossWeights::alpha2)},
      {"gamma", nested(&ExperimentConfig::weights, &distill::LossWeights::gamma)},
      {"alpha_f", nested(&ExperimentConfig::weights, &distill::LossWeights::alpha_f)},
      {"t_cdd", nested(&ExperimentConfig::weights, &distill::LossWeights::t_cdd)},
      {"momentum", number(&ExperimentConfig::momentum)},
      {"queue_capacity", number(&ExperimentConfig::queue_capacity)},
      {"epochs", number(&ExperimentConfig::epochs)},
      {"lr", number(&ExperimentConfig::lr)},
      {"decay_epoch", number(&ExperimentConfig::decay_epoch)},
      {"decay_factor", number(&ExperimentConfig::decay_factor)},
      {"batch_size", number(&ExperimentConfig::batch_size)},
      {"weight_decay", number(&ExperimentConfig::weight_decay)},
      {"beta1", number(&ExperimentConfig::beta1)},
      {"beta2", number(&ExperimentConfig::beta2)},
      {"adam_eps", number(&ExperimentConfig::adam_eps)},
      {"long_schedule",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.long_schedule = parse_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.long_schedule ? "true" : "false"); }}},
      {"mode",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.mode = parse_mode(v); },
        [](const ExperimentConfig& c) { return to_string(c.mode); }}},
      {"init_seed", number(&ExperimentConfig::init_seed)},
      {"data_seed", number(&ExperimentConfig::data_seed)},
      {"top_k", number(&ExperimentConfig::top_k)},
      {"rare_threshold", number(&ExperimentConfig::rare_threshold)},
      {"out_dir",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
        [](const ExperimentConfig& c) { return c.out_dir; }}},
      {"save_artifacts",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.save_artifacts = parse_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.save_artifacts ? "true" : "false"); }}},
  };
  return t;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : table()) {
    if (k == key) return f;
  }
  throw InvalidInput("config: unknown key '" + key + "'");
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Finetune: return "finetune";
    case Mode::CddOnly: return "cdd_only";
    case Mode::CddMfd: return "cdd_mfd";
    case Mode::CddCfd: return "cdd_cfd";
    case Mode::IrdFull: return "ird_full";
    case Mode::Joint: return "joint";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : all_modes()) {
    if (to_string(m) == s) return m;
  }
  throw InvalidInput("config: unknown mode '" + s + "'");
}

const std::vector<Mode>& all_modes() {
  static const std::vector<Mode> m = {Mode::Finetune, Mode::CddOnly, Mode::CddMfd,
                                      Mode::CddCfd,   Mode::IrdFull, Mode::Joint};
  return m;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string ExperimentConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : table()) out.push_back(name);
    return out;
  }();
  return k;
}

void ExperimentConfig::validate() const {
  if (train_images == 0 || test_images == 0) throw InvalidInput("config: image counts must be positive");
  if (phase_count < 1) throw InvalidInput("config: phase_count must be at least 1");
  detector.validate();
  if (hidden.empty() || feature_dim == 0) throw InvalidInput("config: encoder needs hidden layers and feature_dim > 0");
  if (!(eta_init > 0.0)) throw InvalidInput("config: eta_init must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("config: lambda must lie in [0,1]");
  weights.validate();
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw InvalidInput("config: momentum must lie in [0,1]");
  if (queue_capacity == 0) throw InvalidInput("config: queue_capacity must be positive");
  if (epochs < 0 || decay_epoch < 0) throw InvalidInput("config: epochs and decay_epoch must be non-negative");
  if (!(lr > 0.0) || !(decay_factor > 0.0)) throw InvalidInput("config: lr and decay_factor must be positive");
  if (batch_size == 0) throw InvalidInput("config: batch_size must be positive");
  if (top_k == 0) throw InvalidInput("config: top_k must be positive");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : table()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  // Output location does not change results.
  ExperimentConfig c = *this;
  c.out_dir.clear();
  c.save_artifacts = true;
  return fnv1a(c.to_text());
}

ExperimentConfig read_config(std::istream& is, ExperimentConfig base) {
  std::string line;
  while (std::getline(is, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config: expected key = value, got '" + line + "'");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("config: cannot open " + path);
  return read_config(is, std::move(base));
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.world_seed = cfg.plan_seed = cfg.init_seed = cfg.data_seed = seed;
}

distill::LossWeights effective_weights(const ExperimentConfig& cfg) {
  distill::LossWeights w = cfg.weights;
  switch (cfg.mode) {
    case Mode::Finetune:
    case Mode::Joint: w.alpha0 = w.alpha1 = w.alpha2 = 0.0; break;
    case Mode::CddOnly: w.alpha1 = w.alpha2 = 0.0; break;
    case Mode::CddMfd: w.alpha2 = 0.0; break;
    case Mode::CddCfd: w.alpha1 = 0.0; break;
    case Mode::IrdFull: break;
  }
  return w;
}

Schedule effective_schedule(const ExperimentConfig& cfg) {
  if (cfg.long_schedule) return {25, 1e-4, 17, 0.1};
  return {cfg.epochs, cfg.lr, cfg.decay_epoch, cfg.decay_factor};
}

}  // namespace ird::run
