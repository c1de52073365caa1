#pragma once

#include <vector>

#include "tcemb/mlp.hpp"
#include "tcemb/types.hpp"

namespace tcemb {

/// Adam accumulators mirroring the parameter shapes, plus the constants
/// and the learning rate currently in force (set per epoch from the
/// schedule by the trainer).
struct AdamState {
  std::vector<MlpLayer> first_moment;
  std::vector<MlpLayer> second_moment;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  static AdamState init(const MlpParams& params, double lr);
};

/// One Adam update with bias correction, in place.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

/// Exponential step decay: the rate is multiplied by `decay` once per
/// full interval elapsed at or after start_epoch, and stays constant
/// after final_epoch.
struct LrSchedule {
  double initial = 1e-3;
  double decay = 0.95;
  int interval = 50;
  int start_epoch = 500;
  int final_epoch = 800;

  void validate() const;
};

double lr_at_epoch(const LrSchedule& schedule, int epoch);

}  // namespace tcemb
