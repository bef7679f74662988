#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ird/common/errors.hpp"
#include "ird/synthworld/dataset.hpp"

namespace ird::world {
namespace {

void write_box(std::ostream& os, const Box& b) { os << ' ' << b.x1 << ' ' << b.y1 << ' ' << b.x2 << ' ' << b.y2; }

Box read_box(std::istream& is) {
  Box b;
  is >> b.x1 >> b.y1 >> b.x2 >> b.y2;
  return b;
}

}  // namespace

void write_dataset(std::ostream& os, const std::vector<SynthImage>& images) {
  const auto old_precision = os.precision(17);
  os << "# ird-dataset v1: id feature_seed n_latent latent... n_instances "
        "{hx1 hy1 hx2 hy2 ox1 oy1 ox2 oy2 object n_rel rel...}\n";
  for (const auto& img : images) {
    os << img.id << ' ' << img.feature_seed << ' ' << img.latent.size();
    for (double v : img.latent) os << ' ' << v;
    os << ' ' << img.instances.size();
    for (const auto& inst : img.instances) {
      write_box(os, inst.human);
      write_box(os, inst.object);
      os << ' ' << inst.object_class << ' ' << inst.relations.size();
      for (int r : inst.relations) os << ' ' << r;
    }
    os << '\n';
  }
  os.precision(old_precision);
}

std::vector<SynthImage> read_dataset(std::istream& is) {
  std::vector<SynthImage> images;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SynthImage img;
    std::size_t n_latent = 0, n_inst = 0;
    ls >> img.id >> img.feature_seed >> n_latent;
    img.latent.resize(n_latent);
    for (double& v : img.latent) ls >> v;
    ls >> n_inst;
    for (std::size_t i = 0; ls && i < n_inst; ++i) {
      GtInstance inst;
      inst.human = read_box(ls);
      inst.object = read_box(ls);
      std::size_t n_rel = 0;
      ls >> inst.object_class >> n_rel;
      inst.relations.resize(n_rel);
      for (int& r : inst.relations) ls >> r;
      img.instances.push_back(std::move(inst));
    }
    if (!ls) throw RuntimeFailure("dataset: malformed record on line " + std::to_string(lineno));
    images.push_back(std::move(img));
  }
  return images;
}

void save_dataset(const std::filesystem::path& path, const std::vector<SynthImage>& images) {
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("dataset: cannot open " + path.string() + " for writing");
  write_dataset(os, images);
}

std::vector<SynthImage> load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("dataset: cannot open " + path.string());
  return read_dataset(is);
}

}  // namespace ird::world
