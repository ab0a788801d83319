#include "phasemem/manifest.hpp"

#include <fstream>

#include "phasemem/errors.hpp"

namespace phasemem::manifest {

void write(const Manifest& m, const std::string& dir) {
  nlohmann::json j;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config"] = m.config;
  if (!m.results.is_null()) j["results"] = m.results;
  j["outputs"] = m.outputs;
  j["kernel_lane"] = m.kernel_lane;
  const std::string path = dir + "/manifest.json";
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

Manifest read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path + ": invalid manifest: " + e.what());
  }
  Manifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    if (j.contains("results")) m.results = j.at("results");
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.kernel_lane = j.value("kernel_lane", "");
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path + ": incomplete manifest: " + e.what());
  }
  return m;
}

}  // namespace phasemem::manifest
