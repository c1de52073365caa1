#pragma once

#include <string>
#include <vector>

#include "tcemb/config.hpp"
#include "tcemb/manifest.hpp"

namespace tcemb {

/// Pipeline stages behind the CLI subcommands. Each stage reads its
/// inputs from the configured paths, writes its outputs under
/// paths.out_dir and returns the stage manifest (also written to
/// manifest_<stage>.json). Missing upstream artifacts surface as
/// DataError naming the missing file.
StageManifest cmd_gen(const RunConfig& config);
StageManifest cmd_prep(const RunConfig& config);
StageManifest cmd_train(const RunConfig& config);
StageManifest cmd_stats(const RunConfig& config);
StageManifest cmd_embed(const RunConfig& config);
StageManifest cmd_eval(const RunConfig& config);
StageManifest cmd_predict(const RunConfig& config);

/// gen -> prep -> train -> stats -> embed -> eval -> predict, plus the
/// aggregated manifest.json covering every output.
std::vector<StageManifest> cmd_pipeline(const RunConfig& config);

}  // namespace tcemb
