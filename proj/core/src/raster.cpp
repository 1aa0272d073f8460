#include "rsv/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsv/error.hpp"

namespace rsv {

void GeoMeta::validate() const {
  if (!(resolution_m_per_px > 0.0) || !std::isfinite(resolution_m_per_px)) {
    throw ValidationError("resolution_m_per_px must be positive, got " + std::to_string(resolution_m_per_px));
  }
  if (origin_row < 0 || origin_col < 0) {
    throw ValidationError("origin offsets must be non-negative");
  }
}

namespace {

void check_dims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ValidationError("raster dimensions must be positive, got " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
}

void check_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw ValidationError("mask shape mismatch: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                          " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

template <class Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  check_same_shape(a, b);
  BinaryMask out(a.height(), a.width(), false, a.meta());
  auto& o = out.bits();
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = op(x[i] != 0, y[i] != 0) ? 1 : 0;
  return out;
}

}  // namespace

Raster::Raster(int height, int width, int channels, GeoMeta meta)
    : Raster(height, width, channels,
             std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0) *
                                       std::max(channels, 0)),
             meta) {}

Raster::Raster(int height, int width, int channels, std::vector<std::uint8_t> data, GeoMeta meta)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)), meta_(meta) {
  check_dims(height, width);
  if (channels != 1 && channels != 3) throw ValidationError("channels must be 1 or 3");
  if (data_.size() != pixel_count() * channels_) throw ValidationError("raster data length mismatch");
  meta_.validate();
}

BinaryMask::BinaryMask(int height, int width, bool value, GeoMeta meta)
    : height_(height), width_(width), meta_(meta) {
  check_dims(height, width);
  meta_.validate();
  bits_.assign(static_cast<std::size_t>(height) * width, value ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

ProbMap::ProbMap(int height, int width, float value, GeoMeta meta)
    : ProbMap(height, width, std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0), value),
              meta) {}

ProbMap::ProbMap(int height, int width, std::vector<float> probs, GeoMeta meta)
    : height_(height), width_(width), probs_(std::move(probs)), meta_(meta) {
  check_dims(height, width);
  meta_.validate();
  if (probs_.size() != static_cast<std::size_t>(height) * width) throw ValidationError("prob map length mismatch");
  validate();
}

void ProbMap::validate() const {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const float v = probs_[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ValidationError("probability at index " + std::to_string(i) + " is outside [0,1]: " + std::to_string(v));
    }
  }
}

BinaryMask threshold(const ProbMap& p, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("threshold must lie in [0,1], got " + std::to_string(t));
  BinaryMask out(p.height(), p.width(), false, p.meta());
  auto& bits = out.bits();
  const auto& probs = p.probs();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = static_cast<double>(probs[i]) >= t ? 1 : 0;
  return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}
BinaryMask mask_not(const BinaryMask& a) {
  BinaryMask out = a;
  for (auto& b : out.bits()) b = b ? 0 : 1;
  return out;
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
  check_same_shape(inner, outer);
  const auto& x = inner.bits();
  const auto& y = outer.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && !y[i]) return false;
  }
  return true;
}

}  // namespace rsv
