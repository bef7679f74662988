#include "ird/numkit/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ird/common/errors.hpp"

namespace ird::num {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
}

std::string next_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw RuntimeFailure(std::string("checkpoint: truncated header, expected ") + what);
  return line;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << "IRDCKPT\n";
  os << "version " << kCheckpointVersion << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidInput("checkpoint: meta key/value may not contain spaces or newlines: " + k);
    }
    os << "meta " << k << ' ' << v << '\n';
  }
  const ParameterSet& ps = ckpt.params;
  os << "params " << ps.size() << '\n';
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor& t = ps.value(i);
    os << ps.name(i) << ' ' << t.rank();
    for (std::size_t d : t.shape()) os << ' ' << d;
    os << '\n';
  }
  os << "data\n";
  for (const Tensor& t : ps.values()) {
    for (double v : t.storage()) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      os.write(buf, 8);
    }
  }
  if (!os) throw RuntimeFailure("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint ckpt;
  if (next_line(is, "magic") != "IRDCKPT") throw RuntimeFailure("checkpoint: bad magic");
  {
    std::istringstream ls(next_line(is, "version"));
    std::string key;
    int version = 0;
    ls >> key >> version;
    if (key != "version" || version != kCheckpointVersion) {
      throw RuntimeFailure("checkpoint: unsupported version line");
    }
  }
  std::size_t count = 0;
  for (;;) {
    std::string line = next_line(is, "params");
    if (line.rfind("meta ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) throw RuntimeFailure("checkpoint: malformed meta line");
      ckpt.meta[line.substr(5, sp - 5)] = line.substr(sp + 1);
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key >> count;
    if (key != "params" || !ls) throw RuntimeFailure("checkpoint: expected params line");
    break;
  }
  std::vector<std::pair<std::string, Shape>> layout;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream ls(next_line(is, "parameter"));
    std::string name;
    std::size_t rank = 0;
    ls >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) ls >> d;
    if (!ls) throw RuntimeFailure("checkpoint: malformed parameter line for '" + name + "'");
    layout.emplace_back(name, shape);
  }
  if (next_line(is, "data") != "data") throw RuntimeFailure("checkpoint: missing data marker");
  for (auto& [name, shape] : layout) {
    std::vector<double> values(shape_size(shape));
    for (double& v : values) {
      char buf[8];
      if (!is.read(buf, 8)) throw RuntimeFailure("checkpoint: truncated data for '" + name + "'");
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      v = std::bit_cast<double>(to_little_endian(bits));
    }
    ckpt.params.add(name, Tensor(shape, std::move(values)));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace ird::num
