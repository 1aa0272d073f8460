#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsv/fcn.hpp"
#include "rsv/losses.hpp"
#include "rsv/metrics.hpp"
#include "rsv/optim.hpp"

namespace rsv {

struct TrainConfig {
  double initial_lr = 1e-3;
  ScheduleConfig schedule;      // factor 0.2, patience 5, floor 1e-7, stop after 20
  int max_epochs = 100;
  int batch_size = 4;
  double flip_rate = 0.5;       // per axis, per sample
  LossId loss = LossId::bce;
  LossParams loss_params;
  std::uint64_t seed = 0;
  bool restore_best = true;     // return the weights of the best validation epoch

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  TinyFcn model;
  std::vector<EpochRecord> history;
  bool stopped_early = false;
  int best_epoch = 0;
};

/// Seeded, fully deterministic minibatch training with Adam, plateau LR
/// reduction and early stopping.
TrainResult train(TinyFcn model, std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg);

/// Mean loss over a set without augmentation.
double evaluate_set_loss(const TinyFcn& model, std::span<const TrainSample> set, LossId loss,
                         const LossParams& params = {});

/// Pooled confusion over a set at the given probability threshold.
ConfusionCounts evaluate_set_confusion(const TinyFcn& model, std::span<const TrainSample> set,
                                       double threshold = 0.5);

/// `epoch<TAB>train_loss<TAB>val_loss<TAB>lr` per line.
std::string format_history(const std::vector<EpochRecord>& history);
std::vector<EpochRecord> parse_history(const std::string& text);

}  // namespace rsv
