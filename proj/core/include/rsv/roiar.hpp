#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsv/raster.hpp"

namespace rsv {

struct Point {
  double row = 0.0;
  double col = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Vertex chain in (row, col) pixel-center coordinates. A closed polygon
/// implicitly joins the last vertex back to the first.
struct Polygon {
  std::vector<Point> vertices;
  bool closed = true;

  /// Shoelace area in (col, row) coordinates. With rows growing downward a
  /// negative value means counterclockwise as drawn on screen.
  double signed_area() const;
};

enum class RoiMethod { boxes, morphological };

RoiMethod parse_roi_method(const std::string& s);

struct RoiSpec {
  RoiMethod method = RoiMethod::morphological;
  double margin_m = 200.0;
  double simplify_epsilon_px = 10.0;

  void validate() const;
};

/// Outer boundary of every 8-connected foreground component (Moore-neighbor
/// tracing), counterclockwise on screen, starting at the component's first
/// pixel in raster order. Components of one or two pixels produce open
/// chains with fewer than three vertices.
std::vector<Polygon> trace_contours(const BinaryMask& mask);

/// Douglas-Peucker simplification. Keeps a vertex only when it is farther
/// than epsilon from the segment joining the retained neighbors.
Polygon simplify_polygon(const Polygon& poly, double epsilon_px);

/// Union of axis-aligned boxes spanning each consecutive vertex pair,
/// grown by margin_m on every side, clipped to the frame, minus `reservoir`.
BinaryMask boxes_roi(const BinaryMask& reservoir, const std::vector<Polygon>& polys, double margin_m);

/// Margin in whole pixels used by the morphological method: round(margin_m / res).
int morph_margin_px(double margin_m, double resolution_m_per_px);

/// dilate(reservoir, square of side 2k+1) minus reservoir, k = morph_margin_px.
BinaryMask morph_roi(const BinaryMask& reservoir, double margin_m);

/// Runs the configured method end to end on a reservoir mask.
BinaryMask extract_roi(const BinaryMask& reservoir, const RoiSpec& spec);

/// Keeps pixels inside `roi`; every channel elsewhere becomes fill_value.
Raster apply_roi(const Raster& raster, const BinaryMask& roi, std::uint8_t fill_value = 0);

}  // namespace rsv
