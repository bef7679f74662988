#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "ird/numkit/params.hpp"

namespace ird::num {

// Flat checkpoint file:
//
//   IRDCKPT
//   version 1
//   meta <key> <value>          (zero or more)
//   params <count>
//   <name> <rank> <d0> ... <dk> (one line per parameter)
//   data
//   <raw little-endian float64 values, parameters in header order>
//
// Round trips are bit-exact.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParameterSet params;
  std::map<std::string, std::string> meta;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ird::num
