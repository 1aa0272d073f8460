#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rsv/error.hpp"

namespace rsv {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update, in place.
template <class Param>
void adam_step(std::span<Param> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] = static_cast<Param>(static_cast<double>(params[i]) - lr * mhat / (std::sqrt(vhat) + state.eps));
  }
}

/// Reduce-on-plateau and early-stopping settings.
///
/// Patience windows are inclusive: the epoch that set the best loss (or the
/// epoch after a learning-rate reduction) is the first epoch of the window.
/// With patience 5, six flat epochs trigger one reduction at the fifth; with
/// patience 20, twenty flat epochs trigger a stop.
struct ScheduleConfig {
  double factor = 0.2;
  int plateau_patience = 5;
  double min_lr = 1e-7;
  int early_stop_patience = 20;

  void validate() const;
};

/// Learning rate to use after the last epoch of `val_history`, given the rate
/// that was in effect during it.
double lr_schedule_update(std::span<const double> val_history, double current_lr, const ScheduleConfig& cfg);

/// Learning rate in effect during each epoch when starting from initial_lr.
std::vector<double> replay_lr_schedule(std::span<const double> val_history, double initial_lr,
                                       const ScheduleConfig& cfg);

/// True once the best validation loss is `early_stop_patience` epochs old
/// (counting the epoch that set it).
bool early_stop_check(std::span<const double> val_history, const ScheduleConfig& cfg);

}  // namespace rsv
