#include "rsv/trainer.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <random>
#include <sstream>

#include "rsv/detail/shuffle.hpp"
#include "rsv/error.hpp"
#include "rsv/tiling.hpp"

namespace rsv {

void TrainConfig::validate() const {
  schedule.validate();
  loss_params.validate();
  if (!(initial_lr > 0.0)) throw ValidationError("initial_lr must be positive");
  if (!(schedule.min_lr < initial_lr)) throw ValidationError("min_lr must be below initial_lr");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw ValidationError("flip_rate must lie in [0,1]");
}

namespace {

TrainSample flipped(const TrainSample& s, bool h, bool v) {
  TrainSample out;
  out.image = flip(s.image, h, v);
  out.label = flip(s.label, h, v);
  if (s.valid.size() != 0) out.valid = flip(s.valid, h, v);
  return out;
}

}  // namespace

double evaluate_set_loss(const TinyFcn& model, std::span<const TrainSample> set, LossId loss,
                         const LossParams& params) {
  return fcn_loss_and_gradient<float>(model.widths(), model.params(), set, loss, params, {});
}

ConfusionCounts evaluate_set_confusion(const TinyFcn& model, std::span<const TrainSample> set, double threshold) {
  ConfusionCounts total;
  for (const auto& s : set) {
    const auto p = model.forward(s.image);
    BinaryMask pred(s.label.height(), s.label.width());
    for (std::size_t i = 0; i < p.size(); ++i) pred.bits()[i] = static_cast<double>(p[i]) >= threshold ? 1 : 0;
    if (s.valid.size() != 0) {
      total += confusion(pred, s.label, s.valid);
    } else {
      total += confusion(pred, s.label);
    }
  }
  return total;
}

TrainResult train(TinyFcn model, std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) throw ValidationError("train: training and validation sets must be non-empty");

  std::mt19937_64 gen(cfg.seed);
  AdamState adam(model.param_count());
  std::vector<double> grad(model.param_count());
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result{model, {}, false, 0};
  std::vector<double> val_history;
  double lr = cfg.initial_lr;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    detail::shuffle_with(order, gen);
    double train_sum = 0.0;
    std::vector<TrainSample> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = start; k < end; ++k) {
        const bool h = detail::draw_unit(gen) < cfg.flip_rate;
        const bool v = detail::draw_unit(gen) < cfg.flip_rate;
        batch.push_back(flipped(train_set[order[k]], h, v));
      }
      const double loss = fcn_loss_and_gradient<float>(model.widths(), model.params(), batch, cfg.loss,
                                                       cfg.loss_params, grad);
      train_sum += loss * static_cast<double>(batch.size());
      adam_step<float>(model.params(), grad, adam, lr);
    }
    const double train_loss = train_sum / static_cast<double>(order.size());
    const double val_loss = evaluate_set_loss(model, val_set, cfg.loss, cfg.loss_params);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back({epoch, train_loss, val_loss, lr});
    val_history.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      if (cfg.restore_best) result.model = model;
    }
    if (early_stop_check(val_history, cfg.schedule)) {
      result.stopped_early = true;
      break;
    }
    lr = lr_schedule_update(val_history, lr, cfg.schedule);
  }
  if (!cfg.restore_best) result.model = model;
  return result;
}

std::string format_history(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    os << buf;
  }
  return os.str();
}

std::vector<EpochRecord> parse_history(const std::string& text) {
  std::vector<EpochRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d\t%lf\t%lf\t%lf", &r.epoch, &r.train_loss, &r.val_loss, &r.lr) != 4) {
      throw ValidationError("malformed history line: " + line);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace rsv
