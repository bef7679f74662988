#include "ird/evalkit/report_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "ird/common/errors.hpp"

namespace ird::eval {
namespace {

struct Named {
  const char* key;
  Metric EvalReport::*field;
};

constexpr Named kMetrics[] = {
    {"old", &EvalReport::old_map}, {"full", &EvalReport::full},           {"rare", &EvalReport::rare},
    {"non_rare", &EvalReport::non_rare}, {"rid_phase", &EvalReport::rid_phase}, {"rid", &EvalReport::rid},
    {"uc", &EvalReport::uc},
};

struct NamedSet {
  const char* key;
  std::vector<int> EvalReport::*field;
};

constexpr NamedSet kSets[] = {
    {"old_set", &EvalReport::old_set}, {"full_set", &EvalReport::full_set}, {"rare_set", &EvalReport::rare_set},
    {"non_rare_set", &EvalReport::non_rare_set}, {"rid_set", &EvalReport::rid_set}, {"uc_set", &EvalReport::uc_set},
};

Metric parse_metric(const std::string& s) {
  if (s == "NA") return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::string format_metric(const Metric& m) {
  if (!m) return "NA";
  std::ostringstream os;
  os.precision(17);
  os << *m;
  return os.str();
}

void write_predictions(std::ostream& os, const std::vector<PredictionRecord>& preds) {
  const auto old = os.precision(17);
  for (const auto& p : preds) {
    os << p.image_id << ' ' << p.human.x1 << ' ' << p.human.y1 << ' ' << p.human.x2 << ' ' << p.human.y2 << ' '
       << p.object.x1 << ' ' << p.object.y1 << ' ' << p.object.x2 << ' ' << p.object.y2 << ' ' << p.object_class
       << ' ' << p.relation << ' ' << p.score << '\n';
  }
  os.precision(old);
}

std::vector<PredictionRecord> read_predictions(std::istream& is) {
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PredictionRecord p;
    ls >> p.image_id >> p.human.x1 >> p.human.y1 >> p.human.x2 >> p.human.y2 >> p.object.x1 >> p.object.y1 >>
        p.object.x2 >> p.object.y2 >> p.object_class >> p.relation >> p.score;
    if (!ls) throw RuntimeFailure("predictions: malformed line '" + line + "'");
    out.push_back(p);
  }
  return out;
}

void write_report(std::ostream& os, const EvalReport& r, const std::vector<world::HoiClass>& class_table) {
  os << "phase " << r.phase << '\n';
  for (const auto& m : kMetrics) os << m.key << ' ' << format_metric(r.*(m.field)) << '\n';
  for (const auto& s : kSets) {
    os << s.key;
    for (int c : r.*(s.field)) os << ' ' << c;
    os << '\n';
  }
  for (const auto& [c, ap] : r.class_ap) {
    const auto& h = class_table.at(static_cast<std::size_t>(c));
    os << "class " << c << ' ' << h.object << ' ' << h.relation << ' ' << format_metric(ap) << '\n';
  }
}

EvalReport read_report(std::istream& is) {
  EvalReport r;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool known = false;
    if (key == "phase") {
      ls >> r.phase;
      known = true;
    } else if (key == "class") {
      int c = 0, o = 0, rel = 0;
      std::string v;
      ls >> c >> o >> rel >> v;
      r.class_ap[c] = parse_metric(v);
      known = true;
    }
    for (const auto& m : kMetrics) {
      if (key == m.key) {
        std::string v;
        ls >> v;
        r.*(m.field) = parse_metric(v);
        known = true;
      }
    }
    for (const auto& s : kSets) {
      if (key == s.key) {
        int c = 0;
        while (ls >> c) (r.*(s.field)).push_back(c);
        ls.clear();
        known = true;
      }
    }
    if (!known || !ls) throw RuntimeFailure("report: malformed line '" + line + "'");
  }
  return r;
}

nlohmann::json report_json(const EvalReport& r, const std::vector<world::HoiClass>& class_table) {
  nlohmann::json j;
  j["phase"] = r.phase;
  for (const auto& m : kMetrics) {
    const Metric& v = r.*(m.field);
    j["metrics"][m.key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  for (const auto& s : kSets) j["sets"][s.key] = r.*(s.field);
  j["class_ap"] = nlohmann::json::array();
  for (const auto& [c, ap] : r.class_ap) {
    const auto& h = class_table.at(static_cast<std::size_t>(c));
    j["class_ap"].push_back({{"class", c},
                             {"object", h.object},
                             {"relation", h.relation},
                             {"ap", ap ? nlohmann::json(*ap) : nlohmann::json(nullptr)}});
  }
  return j;
}

}  // namespace ird::eval
