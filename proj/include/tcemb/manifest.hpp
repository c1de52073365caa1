#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tcemb {

/// Digest of a file's bytes (FNV-1a 64, hex). Cheap integrity check for
/// the run manifests, not cryptographic.
std::string file_digest(const std::string& path);

/// Record of one pipeline stage: the files it emitted with their
/// digests, split into deterministic outputs and wall-time-bearing
/// logs, plus the stage seed and duration.
struct StageManifest {
  std::string stage;
  std::uint64_t stage_seed = 0;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> outputs;          // relative path -> digest
  std::map<std::string, std::string> logs;             // excluded from determinism checks
  std::map<std::string, std::string> format_versions;  // format name -> version tag
};

/// Writes <out_dir>/manifest_<stage>.json.
void write_stage_manifest(const std::string& out_dir, const StageManifest& manifest,
                          const std::string& config_snapshot_json);

/// Writes <out_dir>/manifest.json aggregating several stages.
void write_run_manifest(const std::string& out_dir, const std::vector<StageManifest>& stages,
                        const std::string& config_snapshot_json);

/// Reads the deterministic-output digest map back from a manifest file.
std::map<std::string, std::string> read_manifest_outputs(const std::string& path);

}  // namespace tcemb
