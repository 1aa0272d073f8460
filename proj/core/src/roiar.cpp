#include "rsv/roiar.hpp"

#include <algorithm>
#include <cmath>

#include "rsv/error.hpp"
#include "rsv/morphology.hpp"

namespace rsv {

double Polygon::signed_area() const {
  double acc = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    acc += a.col * b.row - b.col * a.row;
  }
  return acc / 2.0;
}

RoiMethod parse_roi_method(const std::string& s) {
  if (s == "boxes") return RoiMethod::boxes;
  if (s == "morph" || s == "morphological") return RoiMethod::morphological;
  throw ValidationError("unknown RoI method '" + s + "' (expected boxes|morph)");
}

void RoiSpec::validate() const {
  if (!(margin_m > 0.0)) throw ValidationError("RoI margin_m must be positive");
  if (method == RoiMethod::boxes && !(simplify_epsilon_px > 0.0)) {
    throw ValidationError("RoI epsilon_px must be positive for the boxes method");
  }
}

namespace {

// Clockwise on screen, starting north.
constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dr, int dc) {
  for (int k = 0; k < 8; ++k) {
    if (kDr[k] == dr && kDc[k] == dc) return k;
  }
  return -1;
}

struct Pixel {
  int row;
  int col;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Next boundary pixel clockwise from `back` around `p`; returns false when
/// `p` is isolated. `back` is updated to the last background neighbor seen.
bool moore_step(const BinaryMask& m, Pixel p, Pixel& back, Pixel& next) {
  const int start = direction_of(back.row - p.row, back.col - p.col);
  for (int i = 1; i <= 8; ++i) {
    const int k = (start + i) % 8;
    const Pixel q{p.row + kDr[k], p.col + kDc[k]};
    if (m.get_or_false(q.row, q.col)) {
      const int kb = (start + i - 1) % 8;
      back = {p.row + kDr[kb], p.col + kDc[kb]};
      next = q;
      return true;
    }
  }
  return false;
}

Polygon trace_one(const BinaryMask& m, Pixel start) {
  std::vector<Pixel> chain{start};
  Pixel back{start.row, start.col - 1};
  Pixel second{};
  if (!moore_step(m, start, back, second)) return Polygon{{{double(start.row), double(start.col)}}, false};
  Pixel p = second;
  // Stop when the walk re-enters the start pixel heading to the same successor.
  const std::size_t guard = 4 * m.size() + 8;
  for (;;) {
    Pixel next{};
    moore_step(m, p, back, next);
    if (p == start && next == second) break;
    chain.push_back(p);
    p = next;
    if (chain.size() > guard) throw NumericError("contour tracing did not terminate");
  }
  Polygon poly;
  poly.vertices.reserve(chain.size());
  // Reverse everything after the start vertex to turn the clockwise walk counterclockwise.
  poly.vertices.push_back({double(chain[0].row), double(chain[0].col)});
  for (std::size_t i = chain.size(); i-- > 1;) poly.vertices.push_back({double(chain[i].row), double(chain[i].col)});
  poly.closed = poly.vertices.size() >= 3;
  return poly;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dr = b.row - a.row;
  const double dc = b.col - a.col;
  const double len2 = dr * dr + dc * dc;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.row - a.row) * dr + (p.col - a.col) * dc) / len2, 0.0, 1.0);
  const double er = a.row + t * dr - p.row;
  const double ec = a.col + t * dc - p.col;
  return std::sqrt(er * er + ec * ec);
}

// Marks kept vertices of pts[first..last] (inclusive) recursively.
void douglas_peucker(const std::vector<Point>& pts, std::size_t first, std::size_t last, double eps,
                     std::vector<std::uint8_t>& keep) {
  if (last <= first + 1) return;
  double worst = -1.0;
  std::size_t idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > worst) {
      worst = d;
      idx = i;
    }
  }
  if (worst > eps) {
    keep[idx] = 1;
    douglas_peucker(pts, first, idx, eps, keep);
    douglas_peucker(pts, idx, last, eps, keep);
  }
}

void fill_box(BinaryMask& out, double r0, double r1, double c0, double c1, double margin_px) {
  constexpr double tol = 1e-9;
  const double lo_r = std::ceil(std::min(r0, r1) - margin_px - tol);
  const double hi_r = std::floor(std::max(r0, r1) + margin_px + tol);
  const double lo_c = std::ceil(std::min(c0, c1) - margin_px - tol);
  const double hi_c = std::floor(std::max(c0, c1) + margin_px + tol);
  const int rb = static_cast<int>(std::max(0.0, lo_r));
  const int re = static_cast<int>(std::min(double(out.height() - 1), hi_r));
  const int cb = static_cast<int>(std::max(0.0, lo_c));
  const int ce = static_cast<int>(std::min(double(out.width() - 1), hi_c));
  for (int r = rb; r <= re; ++r)
    for (int c = cb; c <= ce; ++c) out.set(r, c);
}

}  // namespace

std::vector<Polygon> trace_contours(const BinaryMask& mask) {
  std::vector<Polygon> out;
  BinaryMask seen(mask.height(), mask.width(), false, mask.meta());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c) || seen.at(r, c)) continue;
      out.push_back(trace_one(mask, {r, c}));
      // Mark the whole 8-connected component so it is traced once.
      std::vector<Pixel> stack{{r, c}};
      seen.set(r, c);
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int k = 0; k < 8; ++k) {
          const int nr = p.row + kDr[k];
          const int nc = p.col + kDc[k];
          if (mask.get_or_false(nr, nc) && !seen.at(nr, nc)) {
            seen.set(nr, nc);
            stack.push_back({nr, nc});
          }
        }
      }
    }
  }
  return out;
}

Polygon simplify_polygon(const Polygon& poly, double epsilon_px) {
  if (!(epsilon_px > 0.0)) throw ValidationError("simplify_polygon: epsilon must be positive");
  const auto& pts = poly.vertices;
  const std::size_t n = pts.size();
  if (poly.closed && n < 3) throw ValidationError("simplify_polygon: closed polygon needs at least 3 vertices");
  if (n < 3) return poly;

  std::vector<std::uint8_t> keep(n, 0);
  if (poly.closed) {
    // Split the ring at vertex 0 and the vertex farthest from it.
    std::size_t far = 1;
    double best = -1.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double d = std::hypot(pts[i].row - pts[0].row, pts[i].col - pts[0].col);
      if (d > best) {
        best = d;
        far = i;
      }
    }
    std::vector<Point> ring(pts);
    ring.push_back(pts[0]);
    std::vector<std::uint8_t> ring_keep(n + 1, 0);
    ring_keep[0] = ring_keep[far] = ring_keep[n] = 1;
    douglas_peucker(ring, 0, far, epsilon_px, ring_keep);
    douglas_peucker(ring, far, n, epsilon_px, ring_keep);
    std::copy(ring_keep.begin(), ring_keep.begin() + static_cast<std::ptrdiff_t>(n), keep.begin());
  } else {
    keep[0] = keep[n - 1] = 1;
    douglas_peucker(pts, 0, n - 1, epsilon_px, keep);
  }
  Polygon out;
  out.closed = poly.closed;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.vertices.push_back(pts[i]);
  }
  return out;
}

BinaryMask boxes_roi(const BinaryMask& reservoir, const std::vector<Polygon>& polys, double margin_m) {
  if (!(margin_m > 0.0)) throw ValidationError("boxes_roi: margin_m must be positive");
  const double m = reservoir.meta().to_pixels(margin_m);
  BinaryMask out(reservoir.height(), reservoir.width(), false, reservoir.meta());
  for (const auto& poly : polys) {
    const auto& v = poly.vertices;
    if (v.size() == 1) {
      fill_box(out, v[0].row, v[0].row, v[0].col, v[0].col, m);
      continue;
    }
    for (std::size_t i = 0; i + 1 < v.size(); ++i) fill_box(out, v[i].row, v[i + 1].row, v[i].col, v[i + 1].col, m);
    if (poly.closed && v.size() >= 3) fill_box(out, v.back().row, v.front().row, v.back().col, v.front().col, m);
  }
  return mask_minus(out, reservoir);
}

int morph_margin_px(double margin_m, double resolution_m_per_px) {
  if (!(margin_m > 0.0)) throw ValidationError("margin_m must be positive");
  if (!(resolution_m_per_px > 0.0)) throw ValidationError("resolution must be positive");
  return static_cast<int>(std::lround(margin_m / resolution_m_per_px));
}

BinaryMask morph_roi(const BinaryMask& reservoir, double margin_m) {
  const int k = morph_margin_px(margin_m, reservoir.meta().resolution_m_per_px);
  return mask_minus(dilate(reservoir, StructuringElement::square(2 * k + 1)), reservoir);
}

BinaryMask extract_roi(const BinaryMask& reservoir, const RoiSpec& spec) {
  spec.validate();
  if (spec.method == RoiMethod::morphological) return morph_roi(reservoir, spec.margin_m);
  std::vector<Polygon> polys = trace_contours(reservoir);
  for (auto& p : polys) {
    if (p.closed) p = simplify_polygon(p, spec.simplify_epsilon_px);
  }
  return boxes_roi(reservoir, polys, spec.margin_m);
}

Raster apply_roi(const Raster& raster, const BinaryMask& roi, std::uint8_t fill_value) {
  if (raster.height() != roi.height() || raster.width() != roi.width()) {
    throw ValidationError("apply_roi: raster " + std::to_string(raster.height()) + "x" +
                          std::to_string(raster.width()) + " does not match RoI " + std::to_string(roi.height()) +
                          "x" + std::to_string(roi.width()));
  }
  Raster out = raster;
  for (int r = 0; r < raster.height(); ++r) {
    for (int c = 0; c < raster.width(); ++c) {
      if (roi.at(r, c)) continue;
      for (int ch = 0; ch < raster.channels(); ++ch) out.at(r, c, ch) = fill_value;
    }
  }
  return out;
}

}  // namespace rsv
