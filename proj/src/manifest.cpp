#include "tcemb/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/hash.hpp"

namespace tcemb {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("digest: cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::uint64_t h = fnv1a64(buf.str());
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

namespace {

nlohmann::json stage_to_json(const StageManifest& manifest) {
  nlohmann::json j;
  j["stage"] = manifest.stage;
  j["stage_seed"] = manifest.stage_seed;
  j["wall_seconds"] = manifest.wall_seconds;
  j["outputs"] = manifest.outputs;
  j["logs"] = manifest.logs;
  j["format_versions"] = manifest.format_versions;
  return j;
}

}  // namespace

void write_stage_manifest(const std::string& out_dir, const StageManifest& manifest,
                          const std::string& config_snapshot_json) {
  nlohmann::json j = stage_to_json(manifest);
  j["config"] = nlohmann::json::parse(config_snapshot_json);
  write_lines(out_dir + "/manifest_" + manifest.stage + ".json", j.dump(2) + "\n");
}

void write_run_manifest(const std::string& out_dir, const std::vector<StageManifest>& stages,
                        const std::string& config_snapshot_json) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_snapshot_json);
  j["stages"] = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::object();
  double total_seconds = 0.0;
  for (const auto& stage : stages) {
    j["stages"].push_back(stage_to_json(stage));
    for (const auto& [file, digest] : stage.outputs) outputs[file] = digest;
    total_seconds += stage.wall_seconds;
  }
  j["outputs"] = outputs;
  j["total_seconds"] = total_seconds;
  write_lines(out_dir + "/manifest.json", j.dump(2) + "\n");
}

std::map<std::string, std::string> read_manifest_outputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("manifest: cannot open: " + path);
  nlohmann::json j;
  in >> j;
  std::map<std::string, std::string> outputs;
  for (const auto& [file, digest] : j.at("outputs").items()) {
    outputs[file] = digest.get<std::string>();
  }
  return outputs;
}

}  // namespace tcemb
