#include "tcemb/optim.hpp"

#include <cmath>

#include "tcemb/error.hpp"

namespace tcemb {

AdamState AdamState::init(const MlpParams& params, double lr) {
  AdamState state;
  state.lr = lr;
  for (const auto& layer : params.layers) {
    MlpLayer zero;
    zero.weight = Mat::Zero(layer.weight.rows(), layer.weight.cols());
    zero.bias = Vec::Zero(layer.bias.size());
    zero.slope = Vec::Zero(layer.slope.size());
    state.first_moment.push_back(zero);
    state.second_moment.push_back(std::move(zero));
  }
  return state;
}

namespace {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.size() != params.layers.size()) {
    throw DimError("adam_step: layer count mismatch");
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    if (grads.layers[k].weight.rows() != params.layers[k].weight.rows() ||
        grads.layers[k].weight.cols() != params.layers[k].weight.cols()) {
      throw DimError("adam_step: gradient shape mismatch");
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& p = params.layers[k];
    const auto& g = grads.layers[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    adam_update(p.weight, g.weight, m.weight, v.weight, state.lr, state.beta1, state.beta2,
                state.eps, bc1, bc2);
    adam_update(p.bias, g.bias, m.bias, v.bias, state.lr, state.beta1, state.beta2, state.eps, bc1,
                bc2);
    adam_update(p.slope, g.slope, m.slope, v.slope, state.lr, state.beta1, state.beta2, state.eps,
                bc1, bc2);
  }
}

void LrSchedule::validate() const {
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("LrSchedule: decay outside (0,1]");
  if (interval <= 0) throw ConfigError("LrSchedule: interval must be positive");
  if (start_epoch > final_epoch) throw ConfigError("LrSchedule: start epoch after final epoch");
}

double lr_at_epoch(const LrSchedule& schedule, int epoch) {
  schedule.validate();
  if (epoch < schedule.start_epoch) return schedule.initial;
  const int effective = std::min(epoch, schedule.final_epoch);
  const int decays = (effective - schedule.start_epoch) / schedule.interval;
  return schedule.initial * std::pow(schedule.decay, static_cast<double>(decays));
}

}  // namespace tcemb
