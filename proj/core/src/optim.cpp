#include "rsv/optim.hpp"

#include <algorithm>
#include <limits>

namespace rsv {

void ScheduleConfig::validate() const {
  if (!(factor > 0.0 && factor < 1.0)) throw ValidationError("plateau factor must lie in (0,1)");
  if (plateau_patience < 1) throw ValidationError("plateau patience must be >= 1");
  if (early_stop_patience < 1) throw ValidationError("early-stop patience must be >= 1");
  if (!(min_lr > 0.0)) throw ValidationError("min_lr must be positive");
}

namespace {

/// Walks the plateau counter over the history; returns whether a reduction
/// fires after each epoch.
std::vector<bool> reduction_events(std::span<const double> history, const ScheduleConfig& cfg) {
  cfg.validate();
  std::vector<bool> fired(history.size(), false);
  double best = std::numeric_limits<double>::infinity();
  int window = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i] < best) {
      best = history[i];
      window = 1;
    } else {
      ++window;
    }
    if (window >= cfg.plateau_patience) {
      fired[i] = true;
      window = 0;
    }
  }
  return fired;
}

double reduce(double lr, const ScheduleConfig& cfg) { return std::max(lr * cfg.factor, cfg.min_lr); }

}  // namespace

double lr_schedule_update(std::span<const double> val_history, double current_lr, const ScheduleConfig& cfg) {
  if (val_history.empty()) throw ValidationError("lr_schedule_update: empty history");
  const auto fired = reduction_events(val_history, cfg);
  return fired.back() ? reduce(current_lr, cfg) : current_lr;
}

std::vector<double> replay_lr_schedule(std::span<const double> val_history, double initial_lr,
                                       const ScheduleConfig& cfg) {
  const auto fired = reduction_events(val_history, cfg);
  std::vector<double> lrs;
  lrs.reserve(val_history.size());
  double lr = initial_lr;
  for (std::size_t i = 0; i < val_history.size(); ++i) {
    lrs.push_back(lr);
    if (fired[i]) lr = reduce(lr, cfg);
  }
  return lrs;
}

bool early_stop_check(std::span<const double> val_history, const ScheduleConfig& cfg) {
  cfg.validate();
  if (val_history.empty()) return false;
  const auto best = std::min_element(val_history.begin(), val_history.end());
  const auto age = static_cast<int>(std::distance(best, val_history.end()));
  return age >= cfg.early_stop_patience;
}

}  // namespace rsv
