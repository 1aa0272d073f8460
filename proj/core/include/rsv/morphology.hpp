#pragma once

#include "rsv/raster.hpp"

namespace rsv {

/// Centered rectangle of ones with odd side lengths.
struct StructuringElement {
  int height = 1;
  int width = 1;

  StructuringElement() = default;
  StructuringElement(int h, int w);
  static StructuringElement square(int side) { return {side, side}; }

  int half_height() const { return height / 2; }
  int half_width() const { return width / 2; }
  friend bool operator==(const StructuringElement&, const StructuringElement&) = default;
};

/// Square element covering roughly `meters` on the ground: side
/// round(meters / resolution), bumped to the next odd number when even.
StructuringElement se_from_resolution(double meters, double resolution_m_per_px);

// Pixels outside the frame count as false for every operator, so erosion
// shrinks objects that touch the border.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);
BinaryMask open(const BinaryMask& mask, const StructuringElement& se);
BinaryMask close(const BinaryMask& mask, const StructuringElement& se);

}  // namespace rsv
