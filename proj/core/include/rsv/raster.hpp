#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rsv {

/// Spatial reference of a raster: isotropic ground resolution plus the pixel
/// offset of this raster inside its parent mosaic.
struct GeoMeta {
  double resolution_m_per_px = 1.0;
  std::int64_t origin_row = 0;
  std::int64_t origin_col = 0;

  /// Converts a metric length to a (fractional) pixel length.
  double to_pixels(double meters) const { return meters / resolution_m_per_px; }

  void validate() const;
  friend bool operator==(const GeoMeta&, const GeoMeta&) = default;
};

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels, row-major.
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels, GeoMeta meta = {});
  Raster(int height, int width, int channels, std::vector<std::uint8_t> data, GeoMeta meta = {});

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  std::uint8_t& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  std::uint8_t at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  const GeoMeta& meta() const { return meta_; }
  GeoMeta& meta() { return meta_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
  GeoMeta meta_;
};

/// Boolean H×W grid stored one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool value = false, GeoMeta meta = {});

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int row, int col) const { return bits_[static_cast<std::size_t>(row) * width_ + col] != 0; }
  void set(int row, int col, bool v = true) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = v ? 1 : 0;
  }
  bool in_frame(int row, int col) const { return row >= 0 && col >= 0 && row < height_ && col < width_; }
  /// Out-of-frame reads are false.
  bool get_or_false(int row, int col) const { return in_frame(row, col) && at(row, col); }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool same_shape(const BinaryMask& o) const { return height_ == o.height_ && width_ == o.width_; }

  const GeoMeta& meta() const { return meta_; }
  GeoMeta& meta() { return meta_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
  GeoMeta meta_;
};

/// Per-pixel probabilities in [0,1], row-major float32.
class ProbMap {
 public:
  ProbMap() = default;
  ProbMap(int height, int width, float value = 0.0f, GeoMeta meta = {});
  ProbMap(int height, int width, std::vector<float> probs, GeoMeta meta = {});

  int height() const { return height_; }
  int width() const { return width_; }
  float at(int row, int col) const { return probs_[static_cast<std::size_t>(row) * width_ + col]; }
  float& at(int row, int col) { return probs_[static_cast<std::size_t>(row) * width_ + col]; }

  const std::vector<float>& probs() const { return probs_; }
  std::vector<float>& probs() { return probs_; }

  const GeoMeta& meta() const { return meta_; }
  GeoMeta& meta() { return meta_; }

  /// Throws ValidationError if any value is outside [0,1] or not finite.
  void validate() const;

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> probs_;
  GeoMeta meta_;
};

/// 8-bit label grid (0 = unlabeled); used for region partitions.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;
  GeoMeta meta;

  std::uint8_t at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
};

/// bit = prob >= t. Throws ValidationError when t is outside [0,1].
BinaryMask threshold(const ProbMap& p, double t);

// Elementwise set operations; shapes must match.
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_not(const BinaryMask& a);
/// True when every set pixel of `inner` is also set in `outer`.
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

}  // namespace rsv
