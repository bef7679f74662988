#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ird/common/errors.hpp"
#include "ird/common/hash.hpp"
#include "ird/curriculum/plan.hpp"

namespace ird::cur {
namespace {

void write_list(std::ostream& os, const std::vector<int>& v) {
  os << ' ' << v.size();
  for (int x : v) os << ' ' << x;
  os << '\n';
}

std::string body(const PhasePlan& plan) {
  std::ostringstream os;
  os << "phase_count " << plan.phase_count << '\n';
  os << "seed " << plan.seed << '\n';
  os << "class_table " << plan.class_table.size();
  for (const auto& h : plan.class_table) os << ' ' << h.object << ':' << h.relation;
  os << '\n';
  os << "holdout";
  write_list(os, plan.holdout);
  for (int t = 1; t <= plan.phase_count; ++t) {
    os << "phase " << t << " classes";
    write_list(os, plan.classes[t - 1]);
    os << "phase " << t << " images";
    write_list(os, plan.images[t - 1]);
  }
  return os.str();
}

std::vector<int> read_list(std::istream& ls) {
  std::size_t n = 0;
  ls >> n;
  std::vector<int> v(n);
  for (int& x : v) ls >> x;
  return v;
}

}  // namespace

std::uint64_t plan_checksum(const PhasePlan& plan) { return fnv1a(body(plan)); }

void write_plan(std::ostream& os, const PhasePlan& plan) {
  const std::string b = body(plan);
  os << "ird-plan 1\n" << b << "checksum " << hex64(fnv1a(b)) << '\n';
}

PhasePlan read_plan(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "ird-plan 1") throw RuntimeFailure("plan: missing 'ird-plan 1' header");
  std::string text, checksum;
  while (std::getline(is, line)) {
    if (line.rfind("checksum ", 0) == 0) {
      checksum = line.substr(9);
      break;
    }
    text += line + '\n';
  }
  if (checksum.empty()) throw RuntimeFailure("plan: missing checksum line");
  if (hex64(fnv1a(text)) != checksum) throw RuntimeFailure("plan: checksum mismatch");

  PhasePlan plan;
  std::istringstream bs(text);
  while (std::getline(bs, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "phase_count") {
      ls >> plan.phase_count;
      if (plan.phase_count < 1) throw RuntimeFailure("plan: bad phase count");
      plan.classes.assign(plan.phase_count, {});
      plan.images.assign(plan.phase_count, {});
    } else if (key == "seed") {
      ls >> plan.seed;
    } else if (key == "class_table") {
      std::size_t n = 0;
      ls >> n;
      for (std::size_t i = 0; i < n; ++i) {
        world::HoiClass h;
        char colon = 0;
        ls >> h.object >> colon >> h.relation;
        plan.class_table.push_back(h);
      }
    } else if (key == "holdout") {
      plan.holdout = read_list(ls);
    } else if (key == "phase") {
      int t = 0;
      std::string what;
      ls >> t >> what;
      if (t < 1 || t > plan.phase_count) throw RuntimeFailure("plan: phase index out of range");
      (what == "classes" ? plan.classes : plan.images)[t - 1] = read_list(ls);
    } else {
      throw RuntimeFailure("plan: unknown record '" + key + "'");
    }
    if (!ls) throw RuntimeFailure("plan: malformed record '" + line + "'");
  }
  return plan;
}

void save_plan(const std::string& path, const PhasePlan& plan) {
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("plan: cannot open " + path + " for writing");
  write_plan(os, plan);
}

PhasePlan load_plan(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("plan: cannot open " + path);
  return read_plan(is);
}

}  // namespace ird::cur
