#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rsv/raster.hpp"

namespace rsv {

struct PatchOrigin {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PatchOrigin&, const PatchOrigin&) = default;
};

/// Non-overlapping tiling of a mosaic; edge patches are zero-padded to full size.
struct PatchGrid {
  int patch_height = 0;
  int patch_width = 0;
  int mosaic_height = 0;
  int mosaic_width = 0;
  std::vector<PatchOrigin> patches;  // raster-scan order

  static PatchGrid make(int mosaic_height, int mosaic_width, int patch_height, int patch_width);

  /// Number of rows/cols of patch `i` that lie inside the mosaic.
  int valid_rows(std::size_t i) const;
  int valid_cols(std::size_t i) const;
  /// True for in-mosaic pixels of patch `i`; false on the zero padding.
  BinaryMask validity(std::size_t i) const;
};

/// Splits `raster` into ceil(H/ph)·ceil(W/pw) patches. Each patch carries its
/// offset inside the mosaic in meta().origin_row/col.
std::vector<Raster> extract_patches(const Raster& raster, int patch_height, int patch_width);
std::vector<BinaryMask> extract_patches(const BinaryMask& mask, int patch_height, int patch_width);

/// Reassembles patches by their meta() offsets; padding is discarded. Throws
/// ValidationError listing offsets when coverage has gaps or overlaps.
ProbMap assemble(const std::vector<ProbMap>& patches, int height, int width);
BinaryMask assemble(const std::vector<BinaryMask>& patches, int height, int width);

Raster flip(const Raster& r, bool horizontal, bool vertical);
BinaryMask flip(const BinaryMask& m, bool horizontal, bool vertical);

// --- dataset preparation ----------------------------------------------------

struct DatasetItem {
  std::string id;
  std::string source;  // mosaic the patch was cut from
};

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t rng_seed = 0;
  bool stratify_by_source = true;

  void validate() const;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Deterministic per-seed split. Val and test sizes are rounded from their
/// fractions (per source when stratified); the remainder goes to train.
DatasetSplit split_dataset(const std::vector<DatasetItem>& items, const SplitSpec& spec);

/// Repeats ids whose label mask has at least `min_positive_px` positives
/// `copies` times in total; order is stable.
std::vector<std::string> oversample(const std::vector<std::string>& train_ids,
                                    const std::map<std::string, BinaryMask>& label_masks,
                                    std::size_t min_positive_px = 200, int copies = 2);

// --- patch manifest -----------------------------------------------------------

/// One line of `id<TAB>source<TAB>origin_row<TAB>origin_col<TAB>split`.
struct ManifestRecord {
  std::string id;
  std::string source;
  int origin_row = 0;
  int origin_col = 0;
  std::string split;
  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

std::string format_manifest(const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> parse_manifest(const std::string& text);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);

/// Canonical patch id: `<stem>_r<row>_c<col>`.
std::string patch_id(const std::string& stem, PatchOrigin origin);

/// Fisher-Yates shuffle driven by a 64-bit Mersenne Twister. Unlike
/// std::shuffle the permutation is identical across standard libraries.
template <class T>
void stable_shuffle(std::vector<T>& v, std::uint64_t seed);

}  // namespace rsv

#include "rsv/detail/shuffle.hpp"
