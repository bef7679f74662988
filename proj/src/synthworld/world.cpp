#include "ird/synthworld/world.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "ird/common/errors.hpp"

namespace ird::world {
namespace {

num::Tensor random_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  num::Tensor t(num::Shape{rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = t.row(r);
    for (double& v : row) v = normal(rng);
    const double n = std::sqrt(num::squared_norm(row));
    for (double& v : row) v /= n;
  }
  return t;
}

num::Tensor random_projection(std::size_t rows, std::size_t cols, Rng& rng) {
  num::Tensor t(num::Shape{rows, cols});
  const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : t.storage()) v = normal(rng, sd);
  return t;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void WorldSpec::validate() const {
  if (n_objects <= 0 || n_relations <= 0) throw InvalidInput("world: object and relation counts must be positive");
  if (classes.empty()) throw InvalidInput("world: the HOI class set is empty");
  if (signal_dim == 0 || nuisance_dim == 0 || latent_dim == 0 || global_dim == 0) {
    throw InvalidInput("world: feature dimensions must be positive");
  }
  if (class_weights.size() != classes.size()) {
    throw InvalidInput("world: " + std::to_string(class_weights.size()) + " class weights for " +
                       std::to_string(classes.size()) + " classes");
  }
  std::set<HoiClass> seen;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const HoiClass& c = classes[i];
    if (c.object < 0 || c.object >= n_objects || c.relation < 0 || c.relation >= n_relations) {
      throw InvalidInput("world: class " + std::to_string(i) + " references an unknown object or relation");
    }
    if (!seen.insert(c).second) throw InvalidInput("world: duplicate class " + std::to_string(i));
    if (!(class_weights[i] > 0.0)) throw InvalidInput("world: class weights must be positive");
  }
  for (const auto& group : cooccurrence) {
    for (int r : group) {
      if (r < 0 || r >= n_relations) throw InvalidInput("world: co-occurrence group references unknown relation");
    }
  }
  for (double s : {onehot_noise, signal_noise, nuisance_noise, box_noise, nuisance_gain}) {
    if (!(s >= 0.0)) throw InvalidInput("world: noise scales and gains must be non-negative");
  }
  if (!(extra_label_prob >= 0.0 && extra_label_prob <= 1.0)) {
    throw InvalidInput("world: extra_label_prob must lie in [0,1]");
  }
}

int WorldSpec::class_id(int object, int relation) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].object == object && classes[i].relation == relation) return static_cast<int>(i);
  }
  return -1;
}

WorldSpec default_world_spec(std::uint64_t seed) {
  WorldSpec spec;
  spec.seed = seed;
  const std::vector<std::vector<int>> table = {
      {0, 1, 2},  // object 0
      {0, 1, 3},  // object 1
      {2, 4},     // object 2
      {3, 5},     // object 3
      {1, 4},     // object 4
      {2, 5},     // object 5
      {0, 1, 4},  // object 6
      {3, 4, 5},  // object 7
  };
  for (int o = 0; o < static_cast<int>(table.size()); ++o) {
    for (int r : table[o]) spec.classes.push_back({o, r});
  }
  spec.cooccurrence = {{0, 1}};
  Rng rng(derive_seed(seed, tag("class-weights")));
  spec.class_weights.resize(spec.classes.size());
  for (double& w : spec.class_weights) w = 0.5 + uniform01(rng);
  // Rare classes: outside the co-occurrence group so their counts stay low.
  for (const HoiClass& c : {HoiClass{2, 2}, HoiClass{5, 5}, HoiClass{4, 4}}) {
    spec.class_weights[spec.class_id(c)] = 0.03;
  }
  return spec;
}

WorldSpec read_world_spec(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("world spec: expected key = value, got '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  WorldSpec spec;
  auto take = [&](const char* key, auto& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream vs(it->second);
    if (!(vs >> out)) throw InvalidInput(std::string("world spec: bad value for ") + key);
    kv.erase(it);
  };
  take("n_objects", spec.n_objects);
  take("n_relations", spec.n_relations);
  take("signal_dim", spec.signal_dim);
  take("nuisance_dim", spec.nuisance_dim);
  take("latent_dim", spec.latent_dim);
  take("global_dim", spec.global_dim);
  take("onehot_noise", spec.onehot_noise);
  take("signal_noise", spec.signal_noise);
  take("nuisance_noise", spec.nuisance_noise);
  take("nuisance_gain", spec.nuisance_gain);
  take("box_noise", spec.box_noise);
  take("extra_label_prob", spec.extra_label_prob);
  take("seed", spec.seed);
  if (auto it = kv.find("classes"); it != kv.end()) {
    std::istringstream vs(it->second);
    std::string tok;
    while (vs >> tok) {
      HoiClass c;
      char colon = 0;
      std::istringstream ts(tok);
      if (!(ts >> c.object >> colon >> c.relation) || colon != ':') {
        throw InvalidInput("world spec: bad class token '" + tok + "'");
      }
      spec.classes.push_back(c);
    }
    kv.erase(it);
  }
  if (auto it = kv.find("class_weights"); it != kv.end()) {
    std::istringstream vs(it->second);
    double w = 0;
    while (vs >> w) spec.class_weights.push_back(w);
    kv.erase(it);
  } else {
    spec.class_weights.assign(spec.classes.size(), 1.0);
  }
  if (auto it = kv.find("cooccurrence"); it != kv.end()) {
    std::istringstream vs(it->second);
    std::string tok;
    while (vs >> tok) {
      std::vector<int> group;
      std::istringstream ts(tok);
      std::string part;
      while (std::getline(ts, part, '+')) group.push_back(std::stoi(part));
      spec.cooccurrence.push_back(group);
    }
    kv.erase(it);
  }
  if (!kv.empty()) throw InvalidInput("world spec: unknown key '" + kv.begin()->first + "'");
  spec.validate();
  return spec;
}

void write_world_spec(std::ostream& os, const WorldSpec& spec) {
  os.precision(17);
  os << "# synthetic HOI world\n";
  os << "n_objects = " << spec.n_objects << '\n';
  os << "n_relations = " << spec.n_relations << '\n';
  os << "classes =";
  for (const auto& c : spec.classes) os << ' ' << c.object << ':' << c.relation;
  os << "\nclass_weights =";
  for (double w : spec.class_weights) os << ' ' << w;
  os << "\ncooccurrence =";
  for (const auto& g : spec.cooccurrence) {
    os << ' ';
    for (std::size_t i = 0; i < g.size(); ++i) os << (i ? "+" : "") << g[i];
  }
  os << '\n';
  os << "signal_dim = " << spec.signal_dim << '\n';
  os << "nuisance_dim = " << spec.nuisance_dim << '\n';
  os << "latent_dim = " << spec.latent_dim << '\n';
  os << "global_dim = " << spec.global_dim << '\n';
  os << "onehot_noise = " << spec.onehot_noise << '\n';
  os << "signal_noise = " << spec.signal_noise << '\n';
  os << "nuisance_noise = " << spec.nuisance_noise << '\n';
  os << "nuisance_gain = " << spec.nuisance_gain << '\n';
  os << "box_noise = " << spec.box_noise << '\n';
  os << "extra_label_prob = " << spec.extra_label_prob << '\n';
  os << "seed = " << spec.seed << '\n';
}

World::World(WorldSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(derive_seed(spec_.seed, tag("world-structure")));
  const auto nr = static_cast<std::size_t>(spec_.n_relations);
  obj_sig_ = random_unit_rows(nr, spec_.signal_dim, rng);
  hum_sig_ = random_unit_rows(nr, spec_.signal_dim, rng);
  for (int o = 0; o < spec_.n_objects; ++o) {
    obj_nuisance_.push_back(random_projection(spec_.nuisance_dim, spec_.signal_dim, rng));
    hum_nuisance_.push_back(random_projection(spec_.nuisance_dim, spec_.signal_dim, rng));
  }
  global_proj_ = random_projection(spec_.global_dim, spec_.latent_dim, rng);
  // Relations are spread around the human on a ring so that spatial layout
  // alone carries some relation signal.
  const double phase = 2.0 * M_PI * uniform01(rng);
  for (std::size_t r = 0; r < nr; ++r) {
    const double angle = phase + 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(nr);
    const double radius = 0.3 + 0.4 * uniform01(rng);
    geometry_.push_back({radius * std::cos(angle), radius * std::sin(angle), 0.8 + 0.4 * uniform01(rng)});
  }
  for (int o = 0; o < spec_.n_objects; ++o) {
    object_size_.emplace_back(0.05 + 0.06 * uniform01(rng), 0.05 + 0.08 * uniform01(rng));
  }
  relations_of_.resize(static_cast<std::size_t>(spec_.n_objects));
  for (const auto& c : spec_.classes) relations_of_[c.object].push_back(c.relation);
  for (auto& v : relations_of_) std::sort(v.begin(), v.end());
}

std::span<const double> World::object_signature(int relation) const { return obj_sig_.row(relation); }
std::span<const double> World::human_signature(int relation) const { return hum_sig_.row(relation); }

std::vector<int> World::label_closure(int object, int relation) const {
  std::vector<int> out{relation};
  for (const auto& group : spec_.cooccurrence) {
    if (std::find(group.begin(), group.end(), relation) == group.end()) continue;
    for (int r : group) {
      if (spec_.class_id(object, r) >= 0) out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace ird::world
