#pragma once

#include <cstdint>
#include <vector>

#include "rsv/morphology.hpp"
#include "rsv/raster.hpp"

namespace rsv {

enum class Connectivity { four = 4, eight = 8 };

/// The complementary connectivity used for the background (8 <-> 4).
constexpr Connectivity complement(Connectivity c) {
  return c == Connectivity::eight ? Connectivity::four : Connectivity::eight;
}

struct BoundingBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;  // inclusive
};

struct Component {
  std::size_t size_px = 0;
  BoundingBox bbox;
  bool touches_border = false;
};

/// Labels 1..count in raster-scan discovery order; 0 is background.
struct ComponentSet {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> label_map;
  std::vector<Component> components;  // components[label - 1]
  GeoMeta meta;

  int count() const { return static_cast<int>(components.size()); }
  std::int32_t label_at(int row, int col) const { return label_map[static_cast<std::size_t>(row) * width + col]; }
  const Component& component(int label) const;
  /// Mask of one component.
  BinaryMask mask_of(int label) const;
};

ComponentSet label_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::eight);

/// Fills every background component (under the complementary connectivity)
/// that does not touch the border and borders exactly one foreground
/// component. Background next to several components is left alone.
BinaryMask fill_enclosed(const BinaryMask& mask, Connectivity connectivity = Connectivity::eight);

/// Squared Euclidean distance (in pixels²) from every pixel to the nearest set
/// pixel of `mask`; +inf-like sentinel when the mask is empty.
std::vector<double> squared_distance_transform(const BinaryMask& mask);

/// Smallest center-to-center distance between pixels of components `a` and
/// `b`, in meters.
double min_component_distance(const ComponentSet& cs, int a, int b, const GeoMeta& geo);

/// Index (label) of the largest component; ties go to the lowest label. 0 if none.
int largest_component(const ComponentSet& cs);

/// Keeps the largest component L and every other component that is at least
/// size_ratio·|L| pixels and no farther than max_dist_m from L.
BinaryMask prune_small_or_distant(const BinaryMask& mask, const GeoMeta& geo, double size_ratio = 0.2,
                                  double max_dist_m = 300.0, Connectivity connectivity = Connectivity::eight);

struct PostprocessParams {
  double threshold = 0.5;
  double kernel_m = 100.0;
  double size_ratio = 0.2;
  double max_dist_m = 300.0;
  bool apply_morphology = true;
  bool apply_object_rules = true;

  void validate() const;
};

/// Every intermediate of the reservoir clean-up chain.
struct PostprocessStages {
  BinaryMask thresholded;
  BinaryMask opened;
  BinaryMask closed;
  BinaryMask filled;
  BinaryMask pruned;  // final
  StructuringElement se;
};

PostprocessStages postprocess_reservoir_stages(const ProbMap& prob, const GeoMeta& geo, const PostprocessParams& params);

/// threshold -> open -> close -> fill_enclosed -> prune_small_or_distant.
BinaryMask postprocess_reservoir(const ProbMap& prob, double threshold, const GeoMeta& geo,
                                 PostprocessParams params = {});

}  // namespace rsv
