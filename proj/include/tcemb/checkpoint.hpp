#pragma once

#include <string>

#include "tcemb/mlp.hpp"

namespace tcemb {

inline constexpr const char* kCheckpointMagic = "TCEMB1";

/// Text checkpoint. Line 1 is the magic, line 2 "n d", then per layer a
/// "layer k rows cols" header followed by the weight rows, the bias line
/// and the slope line, all printed with 17 significant digits so the
/// file round-trips bit-exactly.
std::string checkpoint_to_string(const MlpParams& params);
MlpParams checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint(const std::string& path);

}  // namespace tcemb
