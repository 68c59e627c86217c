#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hirevae {

// Every CLI run writes exactly one of these next to its outputs; replaying a
// command from its manifest reproduces the artifacts bit for bit (the recorded
// wall time is informational and excluded from that contract).
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // fully resolved key=value pairs
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // paths relative to the output directory
  std::string code_version;
  double wall_seconds = 0.0;

  void save(const std::filesystem::path& file) const;
  static RunManifest load(const std::filesystem::path& file);
};

std::string code_version_string();

}  // namespace hirevae
