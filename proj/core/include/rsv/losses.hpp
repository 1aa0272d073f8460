#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsv/raster.hpp"

namespace rsv {

/// Predictions and binary targets for a set of pixels. `include`, when
/// non-empty, excludes pixels (zero padding of edge patches) from every sum.
struct PixelBatch {
  std::vector<double> p;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> include;

  std::size_t size() const { return p.size(); }
  bool included(std::size_t i) const { return include.empty() || include[i] != 0; }
  std::size_t included_count() const;
  void validate() const;
};

struct LossParams {
  double alpha = 0.25;          // weight of class 1; class 0 gets 1 - alpha
  double gamma = 2.0;           // focusing exponent
  double clamp_eps = 1e-7;      // probabilities are clamped to [eps, 1 - eps] before logs
  double dice_smooth = 1e-7;    // added to Dice numerator and denominator

  void validate() const;
};

enum class LossId { bce, balanced_ce, focal, dice, combined };

LossId parse_loss_id(const std::string& s);
std::string to_string(LossId id);

/// Probability assigned to the true class: p for y = 1, 1 - p for y = 0.
double p_t(double p, int y);

double bce(const PixelBatch& batch, const LossParams& params = {});
double balanced_ce(const PixelBatch& batch, const LossParams& params = {});
double focal(const PixelBatch& batch, const LossParams& params = {});
/// 1 - (2·Σ p r + s) / (Σ (p + r) + s), over included pixels.
double dice_loss(const PixelBatch& batch, const LossParams& params = {});
/// dice_loss + focal.
double combined_loss(const PixelBatch& batch, const LossParams& params = {});

double evaluate_loss(LossId id, const PixelBatch& batch, const LossParams& params = {});

/// Analytic ∂loss/∂p_i; zero for excluded pixels.
std::vector<double> loss_gradient(LossId id, const PixelBatch& batch, const LossParams& params = {});

/// Hard-set Dice coefficient 2|A∩B| / (|A| + |B|); 0 when both masks are empty.
double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt);

}  // namespace rsv
