#include "rsv/losses.hpp"

#include <algorithm>
#include <cmath>

#include "rsv/error.hpp"

namespace rsv {

std::size_t PixelBatch::included_count() const {
  if (include.empty()) return p.size();
  return static_cast<std::size_t>(std::count_if(include.begin(), include.end(), [](auto v) { return v != 0; }));
}

void PixelBatch::validate() const {
  if (y.size() != p.size()) throw ValidationError("PixelBatch: p and y lengths differ");
  if (!include.empty() && include.size() != p.size()) throw ValidationError("PixelBatch: include length differs");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("PixelBatch: probability outside [0,1]");
  }
  for (auto v : y) {
    if (v > 1) throw ValidationError("PixelBatch: target must be 0 or 1");
  }
}

void LossParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be non-negative");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ValidationError("clamp_eps must lie in (0, 0.5)");
  if (!(dice_smooth >= 0.0)) throw ValidationError("dice_smooth must be non-negative");
}

LossId parse_loss_id(const std::string& s) {
  if (s == "bce") return LossId::bce;
  if (s == "balanced_ce" || s == "balanced-ce") return LossId::balanced_ce;
  if (s == "focal") return LossId::focal;
  if (s == "dice") return LossId::dice;
  if (s == "combined" || s == "dice+focal") return LossId::combined;
  throw ValidationError("unknown loss id '" + s + "' (expected bce|balanced_ce|focal|dice|combined)");
}

std::string to_string(LossId id) {
  switch (id) {
    case LossId::bce: return "bce";
    case LossId::balanced_ce: return "balanced_ce";
    case LossId::focal: return "focal";
    case LossId::dice: return "dice";
    case LossId::combined: return "combined";
  }
  return "?";
}

double p_t(double p, int y) { return y ? p : 1.0 - p; }

namespace {

std::size_t checked_count(const PixelBatch& b) {
  b.validate();
  const std::size_t n = b.included_count();
  if (n == 0) throw ValidationError("loss over an empty pixel set");
  return n;
}

double clamp_p(double p, const LossParams& params) {
  return std::clamp(p, params.clamp_eps, 1.0 - params.clamp_eps);
}

double alpha_t(int y, const LossParams& params) { return y ? params.alpha : 1.0 - params.alpha; }

// Mean over included pixels of per-pixel term(p_t, y), p clamped first.
template <class Term>
double mean_term(const PixelBatch& b, const LossParams& params, Term term) {
  params.validate();
  const std::size_t n = checked_count(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.included(i)) continue;
    acc += term(p_t(clamp_p(b.p[i], params), b.y[i]), b.y[i]);
  }
  return acc / static_cast<double>(n);
}

// d(term)/d(p_t) as a function of (p_t, y); chain rule dp_t/dp = ±1.
template <class DTerm>
std::vector<double> mean_term_gradient(const PixelBatch& b, const LossParams& params, DTerm dterm) {
  params.validate();
  const std::size_t n = checked_count(b);
  std::vector<double> g(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.included(i)) continue;
    const double p = b.p[i];
    if (p < params.clamp_eps || p > 1.0 - params.clamp_eps) continue;  // clamped: flat
    const double sign = b.y[i] ? 1.0 : -1.0;
    g[i] = sign * dterm(p_t(p, b.y[i]), b.y[i]) / static_cast<double>(n);
  }
  return g;
}

struct DiceSums {
  double intersection = 0.0;  // Σ p r
  double total = 0.0;         // Σ (p + r)
};

DiceSums dice_sums(const PixelBatch& b) {
  DiceSums s;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.included(i)) continue;
    s.intersection += b.p[i] * b.y[i];
    s.total += b.p[i] + b.y[i];
  }
  return s;
}

std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

}  // namespace

double bce(const PixelBatch& b, const LossParams& params) {
  return mean_term(b, params, [](double pt, int) { return -std::log(pt); });
}

double balanced_ce(const PixelBatch& b, const LossParams& params) {
  return mean_term(b, params, [&](double pt, int y) { return -alpha_t(y, params) * std::log(pt); });
}

double focal(const PixelBatch& b, const LossParams& params) {
  return mean_term(b, params, [&](double pt, int y) {
    return -alpha_t(y, params) * std::pow(1.0 - pt, params.gamma) * std::log(pt);
  });
}

double dice_loss(const PixelBatch& b, const LossParams& params) {
  params.validate();
  checked_count(b);
  const DiceSums s = dice_sums(b);
  const double num = 2.0 * s.intersection + params.dice_smooth;
  const double den = s.total + params.dice_smooth;
  if (den == 0.0) return 0.0;  // only reachable with dice_smooth = 0
  return 1.0 - num / den;
}

double combined_loss(const PixelBatch& b, const LossParams& params) { return dice_loss(b, params) + focal(b, params); }

double evaluate_loss(LossId id, const PixelBatch& b, const LossParams& params) {
  switch (id) {
    case LossId::bce: return bce(b, params);
    case LossId::balanced_ce: return balanced_ce(b, params);
    case LossId::focal: return focal(b, params);
    case LossId::dice: return dice_loss(b, params);
    case LossId::combined: return combined_loss(b, params);
  }
  throw ValidationError("unknown loss id");
}

std::vector<double> loss_gradient(LossId id, const PixelBatch& b, const LossParams& params) {
  switch (id) {
    case LossId::bce:
      return mean_term_gradient(b, params, [](double pt, int) { return -1.0 / pt; });
    case LossId::balanced_ce:
      return mean_term_gradient(b, params, [&](double pt, int y) { return -alpha_t(y, params) / pt; });
    case LossId::focal:
      return mean_term_gradient(b, params, [&](double pt, int y) {
        const double q = 1.0 - pt;
        const double g = params.gamma;
        // d/dpt [ -a q^g log pt ] = a (g q^(g-1) log pt - q^g / pt)
        const double dq = g == 0.0 ? 0.0 : g * std::pow(q, g - 1.0) * std::log(pt);
        return alpha_t(y, params) * (dq - std::pow(q, g) / pt);
      });
    case LossId::dice: {
      params.validate();
      checked_count(b);
      const DiceSums s = dice_sums(b);
      const double num = 2.0 * s.intersection + params.dice_smooth;
      const double den = s.total + params.dice_smooth;
      std::vector<double> g(b.size(), 0.0);
      if (den == 0.0) return g;
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.included(i)) g[i] = -(2.0 * b.y[i] * den - num) / (den * den);
      }
      return g;
    }
    case LossId::combined:
      return add(loss_gradient(LossId::dice, b, params), loss_gradient(LossId::focal, b, params));
  }
  throw ValidationError("unknown loss id");
}

double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) throw ValidationError("dice_coefficient: mask shape mismatch");
  std::size_t inter = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool x = pred.bits()[i] != 0;
    const bool y = gt.bits()[i] != 0;
    inter += x && y;
    a += x;
    b += y;
  }
  if (a + b == 0) return 0.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

}  // namespace rsv
