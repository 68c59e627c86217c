#include "hirevae/run_manifest.hpp"

#include "hirevae/io.hpp"

#include <nlohmann/json.hpp>

namespace hirevae {

using json = nlohmann::json;

std::string code_version_string() { return "hirevae/0.1.0"; }

void RunManifest::save(const std::filesystem::path& file) const {
  json j{{"format", "hirevae-run-manifest-v1"},
         {"command", command},
         {"config", config},
         {"seed", seed},
         {"artifacts", artifacts},
         {"code_version", code_version},
         {"wall_seconds", wall_seconds}};
  io::write_text(file, j.dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& file) {
  const json j = json::parse(io::read_text(file));
  if (j.at("format") != "hirevae-run-manifest-v1")
    throw std::runtime_error("unrecognized run manifest: " + file.string());
  RunManifest m;
  m.command = j.at("command");
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed");
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  m.code_version = j.at("code_version");
  m.wall_seconds = j.at("wall_seconds");
  return m;
}

}  // namespace hirevae
