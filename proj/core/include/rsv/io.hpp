#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsv/raster.hpp"

namespace rsv {

/// Header shared by every on-disk raster: `<name>.json` next to `<name>.pgm|.ppm|.f32`.
struct Sidecar {
  int height = 0;
  int width = 0;
  GeoMeta meta;
};

/// `foo/bar.pgm` -> `foo/bar.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

std::string sidecar_to_json(const Sidecar& s);
/// Parses a sidecar document. Rejects anisotropic resolutions given as
/// `resolution_row_m_per_px` / `resolution_col_m_per_px`.
Sidecar sidecar_from_json(const std::string& text);

Sidecar read_sidecar(const std::filesystem::path& json_path);
void write_sidecar(const Sidecar& s, const std::filesystem::path& json_path);

// Binary PNM (P5/P6, maxval 255) in memory.
std::vector<std::uint8_t> encode_pnm(const Raster& r);
Raster decode_pnm(std::span<const std::uint8_t> bytes);

/// Reads a P5/P6 file and its optional sidecar. A missing sidecar yields
/// resolution 1.0 and zero offsets.
Raster read_raster(const std::filesystem::path& path);
/// Writes the PNM and its sidecar.
void write_raster(const Raster& r, const std::filesystem::path& path);

/// Masks are P5 with values {0,255}; any nonzero byte reads as true.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& m, const std::filesystem::path& path);

LabelMask read_label_mask(const std::filesystem::path& path);
void write_label_mask(const LabelMask& m, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_f32(const ProbMap& p);
ProbMap decode_f32(std::span<const std::uint8_t> bytes, const Sidecar& header);

/// Raw little-endian float32 payload plus mandatory sidecar.
ProbMap read_prob_map(const std::filesystem::path& path);
void write_prob_map(const ProbMap& p, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to `<path>.partial` and renames into place, so a failed write never
/// leaves a truncated file under the final name.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rsv
