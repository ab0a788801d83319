#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace phasemem::manifest {

/// Run manifest: the fully resolved configuration, the seed, and the list of
/// produced files. Contains no wall-clock data so a rerun with the same
/// inputs is byte-identical.
struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config;
  nlohmann::json results;  // key estimates and closed-form targets, optional
  std::vector<std::string> outputs;
  std::string kernel_lane;
};

void write(const Manifest& m, const std::string& dir);

/// Load <dir>/manifest.json; throws io_error / data_error.
Manifest read(const std::string& path);

}  // namespace phasemem::manifest
