#include "rsv/morphology.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "rsv/error.hpp"

namespace rsv {

StructuringElement::StructuringElement(int h, int w) : height(h), width(w) {
  if (h < 1 || w < 1 || h % 2 == 0 || w % 2 == 0) {
    throw ValidationError("structuring element sides must be odd and positive, got " + std::to_string(h) + "x" +
                          std::to_string(w));
  }
}

StructuringElement se_from_resolution(double meters, double resolution_m_per_px) {
  if (!(resolution_m_per_px > 0.0)) throw ValidationError("resolution must be positive");
  if (!(meters >= 0.0)) throw ValidationError("kernel size in meters must be non-negative");
  auto side = static_cast<long>(std::lround(meters / resolution_m_per_px));
  if (side % 2 == 0) ++side;
  if (side < 1) side = 1;
  return StructuringElement::square(static_cast<int>(side));
}

namespace {

// Both passes run on prefix counts of set pixels along one axis, so the cost
// is independent of the element size. A window is "all set" when its in-frame
// count equals its full length, which is false whenever it leaves the frame.

enum class Mode { any, all };

void run_pass(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out, int lines, int len,
              std::ptrdiff_t line_stride, std::ptrdiff_t step, int half, Mode mode) {
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  const int full = 2 * half + 1;
  for (int l = 0; l < lines; ++l) {
    const std::ptrdiff_t base = l * line_stride;
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + (in[base + i * step] ? 1 : 0);
    for (int i = 0; i < len; ++i) {
      const int lo = std::max(0, i - half);
      const int hi = std::min(len, i + half + 1);
      const int n = prefix[hi] - prefix[lo];
      out[base + i * step] = (mode == Mode::any ? n > 0 : n == full) ? 1 : 0;
    }
  }
}

BinaryMask separable(const BinaryMask& mask, const StructuringElement& se, Mode mode) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> tmp(mask.size());
  run_pass(mask.bits(), tmp, h, w, w, 1, se.half_width(), mode);
  BinaryMask out(h, w, false, mask.meta());
  run_pass(tmp, out.bits(), w, h, 1, w, se.half_height(), mode);
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) { return separable(mask, se, Mode::any); }

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) { return separable(mask, se, Mode::all); }

BinaryMask open(const BinaryMask& mask, const StructuringElement& se) { return dilate(erode(mask, se), se); }

// The dilated set may extend past the frame; it is kept on a padded canvas so
// the following erosion sees it. Without this, closing would not be extensive
// for objects touching the border.
BinaryMask close(const BinaryMask& mask, const StructuringElement& se) {
  const int ph = se.half_height();
  const int pw = se.half_width();
  if (ph == 0 && pw == 0) return mask;
  BinaryMask canvas(mask.height() + 2 * ph, mask.width() + 2 * pw, false, mask.meta());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) canvas.set(r + ph, c + pw, mask.at(r, c));
  const BinaryMask closed = erode(dilate(canvas, se), se);
  BinaryMask out(mask.height(), mask.width(), false, mask.meta());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) out.set(r, c, closed.at(r + ph, c + pw));
  return out;
}

}  // namespace rsv
