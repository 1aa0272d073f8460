#include "rsv/components.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "rsv/error.hpp"

namespace rsv {

namespace {

constexpr int kDr4[] = {-1, 1, 0, 0};
constexpr int kDc4[] = {0, 0, -1, 1};
constexpr int kDr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};

template <class Visit>
void for_each_neighbor(int r, int c, Connectivity conn, Visit&& visit) {
  if (conn == Connectivity::four) {
    for (int k = 0; k < 4; ++k) visit(r + kDr4[k], c + kDc4[k]);
  } else {
    for (int k = 0; k < 8; ++k) visit(r + kDr8[k], c + kDc8[k]);
  }
}

/// Labels pixels whose value equals `target` (1 = foreground, 0 = background).
ComponentSet label_value(const BinaryMask& mask, std::uint8_t target, Connectivity conn) {
  ComponentSet cs;
  cs.height = mask.height();
  cs.width = mask.width();
  cs.meta = mask.meta();
  cs.label_map.assign(mask.size(), 0);
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::pair<int, int>> stack;
  for (int r0 = 0; r0 < h; ++r0) {
    for (int c0 = 0; c0 < w; ++c0) {
      const auto idx0 = static_cast<std::size_t>(r0) * w + c0;
      if ((mask.bits()[idx0] != 0) != (target != 0) || cs.label_map[idx0] != 0) continue;
      const auto label = static_cast<std::int32_t>(cs.components.size() + 1);
      Component comp;
      comp.bbox = {r0, c0, r0, c0};
      cs.label_map[idx0] = label;
      stack.assign(1, {r0, c0});
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        ++comp.size_px;
        comp.bbox.min_row = std::min(comp.bbox.min_row, r);
        comp.bbox.max_row = std::max(comp.bbox.max_row, r);
        comp.bbox.min_col = std::min(comp.bbox.min_col, c);
        comp.bbox.max_col = std::max(comp.bbox.max_col, c);
        if (r == 0 || c == 0 || r == h - 1 || c == w - 1) comp.touches_border = true;
        for_each_neighbor(r, c, conn, [&](int nr, int nc) {
          if (nr < 0 || nc < 0 || nr >= h || nc >= w) return;
          const auto idx = static_cast<std::size_t>(nr) * w + nc;
          if ((mask.bits()[idx] != 0) != (target != 0) || cs.label_map[idx] != 0) return;
          cs.label_map[idx] = label;
          stack.emplace_back(nr, nc);
        });
      }
      cs.components.push_back(comp);
    }
  }
  return cs;
}

void check_label(const ComponentSet& cs, int label) {
  if (label < 1 || label > cs.count()) {
    throw ValidationError("invalid component label " + std::to_string(label) + " (have " +
                          std::to_string(cs.count()) + ")");
  }
}

constexpr double kFar = 1e20;

// Exact 1-D squared distance transform (lower envelope of parabolas).
void dt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(n, 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  auto meet = [&](int q, int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p)); };
  int k = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = meet(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = meet(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

const Component& ComponentSet::component(int label) const {
  check_label(*this, label);
  return components[static_cast<std::size_t>(label) - 1];
}

BinaryMask ComponentSet::mask_of(int label) const {
  check_label(*this, label);
  BinaryMask m(height, width, false, meta);
  for (std::size_t i = 0; i < label_map.size(); ++i) m.bits()[i] = label_map[i] == label ? 1 : 0;
  return m;
}

ComponentSet label_components(const BinaryMask& mask, Connectivity connectivity) {
  return label_value(mask, 1, connectivity);
}

BinaryMask fill_enclosed(const BinaryMask& mask, Connectivity connectivity) {
  const ComponentSet fg = label_value(mask, 1, connectivity);
  const Connectivity bg_conn = complement(connectivity);
  const ComponentSet bg = label_value(mask, 0, bg_conn);
  std::vector<std::set<std::int32_t>> neighbors(static_cast<std::size_t>(bg.count()));
  const int h = mask.height();
  const int w = mask.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto b = bg.label_at(r, c);
      if (b == 0 || bg.components[b - 1].touches_border) continue;
      auto& adj = neighbors[b - 1];
      if (adj.size() > 1) continue;
      for_each_neighbor(r, c, bg_conn, [&](int nr, int nc) {
        if (nr < 0 || nc < 0 || nr >= h || nc >= w) return;
        if (const auto f = fg.label_at(nr, nc); f != 0) adj.insert(f);
      });
    }
  }
  BinaryMask out = mask;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto b = bg.label_map[i];
    if (b != 0 && !bg.components[b - 1].touches_border && neighbors[b - 1].size() == 1) out.bits()[i] = 1;
  }
  return out;
}

std::vector<double> squared_distance_transform(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<double> grid(mask.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.bits()[i] ? 0.0 : kFar;
  std::vector<double> f(std::max(h, w)), d(std::max(h, w));
  std::vector<int> v;
  std::vector<double> z;
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) f[r] = grid[static_cast<std::size_t>(r) * w + c];
    dt1d(f.data(), d.data(), h, v, z);
    for (int r = 0; r < h; ++r) grid[static_cast<std::size_t>(r) * w + c] = d[r];
  }
  for (int r = 0; r < h; ++r) {
    double* row = &grid[static_cast<std::size_t>(r) * w];
    std::copy(row, row + w, f.begin());
    dt1d(f.data(), row, w, v, z);
  }
  return grid;
}

double min_component_distance(const ComponentSet& cs, int a, int b, const GeoMeta& geo) {
  check_label(cs, a);
  check_label(cs, b);
  if (a == b) throw ValidationError("min_component_distance requires two distinct labels");
  const auto dist2 = squared_distance_transform(cs.mask_of(a));
  double best = kFar;
  for (std::size_t i = 0; i < cs.label_map.size(); ++i) {
    if (cs.label_map[i] == b) best = std::min(best, dist2[i]);
  }
  return std::sqrt(best) * geo.resolution_m_per_px;
}

int largest_component(const ComponentSet& cs) {
  int best = 0;
  std::size_t best_size = 0;
  for (int l = 1; l <= cs.count(); ++l) {
    if (cs.components[l - 1].size_px > best_size) {
      best = l;
      best_size = cs.components[l - 1].size_px;
    }
  }
  return best;
}

BinaryMask prune_small_or_distant(const BinaryMask& mask, const GeoMeta& geo, double size_ratio, double max_dist_m,
                                  Connectivity connectivity) {
  if (!(size_ratio >= 0.0)) throw ValidationError("size_ratio must be non-negative");
  if (!(max_dist_m >= 0.0)) throw ValidationError("max_dist_m must be non-negative");
  geo.validate();
  const ComponentSet cs = label_components(mask, connectivity);
  const int big = largest_component(cs);
  if (big == 0) return mask;
  const double min_size = size_ratio * static_cast<double>(cs.components[big - 1].size_px);
  const auto dist2 = squared_distance_transform(cs.mask_of(big));

  std::vector<double> nearest(static_cast<std::size_t>(cs.count()) + 1, kFar);
  for (std::size_t i = 0; i < cs.label_map.size(); ++i) {
    const auto l = cs.label_map[i];
    if (l != 0) nearest[l] = std::min(nearest[l], dist2[i]);
  }
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(cs.count()) + 1, 0);
  for (int l = 1; l <= cs.count(); ++l) {
    if (l == big) {
      keep[l] = 1;
      continue;
    }
    const bool small = static_cast<double>(cs.components[l - 1].size_px) < min_size;
    const bool far = std::sqrt(nearest[l]) * geo.resolution_m_per_px > max_dist_m;
    keep[l] = (small || far) ? 0 : 1;
  }
  BinaryMask out(mask.height(), mask.width(), false, mask.meta());
  for (std::size_t i = 0; i < out.size(); ++i) out.bits()[i] = keep[cs.label_map[i]];
  return out;
}

void PostprocessParams::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0,1]");
  if (!(kernel_m >= 0.0)) throw ValidationError("kernel_m must be non-negative");
  if (!(size_ratio >= 0.0 && size_ratio <= 1.0)) throw ValidationError("size_ratio must lie in [0,1]");
  if (!(max_dist_m >= 0.0)) throw ValidationError("max_dist_m must be non-negative");
}

PostprocessStages postprocess_reservoir_stages(const ProbMap& prob, const GeoMeta& geo, const PostprocessParams& params) {
  params.validate();
  geo.validate();
  PostprocessStages s;
  s.se = se_from_resolution(params.kernel_m, geo.resolution_m_per_px);
  s.thresholded = threshold(prob, params.threshold);
  s.thresholded.meta() = geo;
  if (params.apply_morphology) {
    s.opened = open(s.thresholded, s.se);
    s.closed = close(s.opened, s.se);
  } else {
    s.opened = s.thresholded;
    s.closed = s.thresholded;
  }
  if (params.apply_object_rules) {
    s.filled = fill_enclosed(s.closed, Connectivity::eight);
    s.pruned = prune_small_or_distant(s.filled, geo, params.size_ratio, params.max_dist_m, Connectivity::eight);
  } else {
    s.filled = s.closed;
    s.pruned = s.closed;
  }
  return s;
}

BinaryMask postprocess_reservoir(const ProbMap& prob, double threshold, const GeoMeta& geo, PostprocessParams params) {
  params.threshold = threshold;
  return postprocess_reservoir_stages(prob, geo, params).pruned;
}

}  // namespace rsv
