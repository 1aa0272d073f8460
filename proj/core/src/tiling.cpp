#include "rsv/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rsv/error.hpp"
#include "rsv/io.hpp"

namespace rsv {

PatchGrid PatchGrid::make(int mosaic_height, int mosaic_width, int patch_height, int patch_width) {
  if (patch_height <= 0 || patch_width <= 0) throw ValidationError("patch dimensions must be positive");
  if (mosaic_height <= 0 || mosaic_width <= 0) throw ValidationError("mosaic dimensions must be positive");
  PatchGrid g{patch_height, patch_width, mosaic_height, mosaic_width, {}};
  for (int r = 0; r < mosaic_height; r += patch_height) {
    for (int c = 0; c < mosaic_width; c += patch_width) g.patches.push_back({r, c});
  }
  return g;
}

int PatchGrid::valid_rows(std::size_t i) const { return std::min(patch_height, mosaic_height - patches.at(i).row); }
int PatchGrid::valid_cols(std::size_t i) const { return std::min(patch_width, mosaic_width - patches.at(i).col); }

BinaryMask PatchGrid::validity(std::size_t i) const {
  BinaryMask m(patch_height, patch_width);
  const int vr = valid_rows(i);
  const int vc = valid_cols(i);
  for (int r = 0; r < vr; ++r)
    for (int c = 0; c < vc; ++c) m.set(r, c);
  return m;
}

std::vector<Raster> extract_patches(const Raster& raster, int patch_height, int patch_width) {
  const PatchGrid grid = PatchGrid::make(raster.height(), raster.width(), patch_height, patch_width);
  const int ch = raster.channels();
  std::vector<Raster> out;
  out.reserve(grid.patches.size());
  for (std::size_t i = 0; i < grid.patches.size(); ++i) {
    const auto [r0, c0] = grid.patches[i];
    GeoMeta meta{raster.meta().resolution_m_per_px, r0, c0};
    Raster p(patch_height, patch_width, ch, meta);
    const int vr = grid.valid_rows(i);
    const int vc = grid.valid_cols(i);
    for (int r = 0; r < vr; ++r) {
      const auto* src = &raster.data()[(static_cast<std::size_t>(r0 + r) * raster.width() + c0) * ch];
      std::copy(src, src + static_cast<std::size_t>(vc) * ch, &p.data()[static_cast<std::size_t>(r) * patch_width * ch]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<BinaryMask> extract_patches(const BinaryMask& mask, int patch_height, int patch_width) {
  const PatchGrid grid = PatchGrid::make(mask.height(), mask.width(), patch_height, patch_width);
  std::vector<BinaryMask> out;
  out.reserve(grid.patches.size());
  for (std::size_t i = 0; i < grid.patches.size(); ++i) {
    const auto [r0, c0] = grid.patches[i];
    BinaryMask p(patch_height, patch_width, false, GeoMeta{mask.meta().resolution_m_per_px, r0, c0});
    for (int r = 0; r < grid.valid_rows(i); ++r)
      for (int c = 0; c < grid.valid_cols(i); ++c) p.set(r, c, mask.at(r0 + r, c0 + c));
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string origin_str(std::int64_t r, std::int64_t c) {
  return "(" + std::to_string(r) + "," + std::to_string(c) + ")";
}

/// Validates that the patch offsets form exactly the PatchGrid over height×width.
template <class Patch>
void check_coverage(const std::vector<Patch>& patches, int height, int width) {
  if (patches.empty()) throw ValidationError("assemble: no patches");
  const int ph = patches.front().height();
  const int pw = patches.front().width();
  const PatchGrid grid = PatchGrid::make(height, width, ph, pw);
  std::set<PatchOrigin> expected(grid.patches.begin(), grid.patches.end());
  std::set<PatchOrigin> seen;
  std::vector<std::string> problems;
  for (const auto& p : patches) {
    const auto r = p.meta().origin_row;
    const auto c = p.meta().origin_col;
    if (p.height() != ph || p.width() != pw) {
      problems.push_back("size mismatch at " + origin_str(r, c));
      continue;
    }
    const PatchOrigin o{static_cast<int>(r), static_cast<int>(c)};
    if (!expected.contains(o)) {
      problems.push_back("unexpected offset " + origin_str(r, c));
    } else if (!seen.insert(o).second) {
      problems.push_back("overlap at " + origin_str(r, c));
    }
  }
  for (const auto& o : expected) {
    if (!seen.contains(o)) problems.push_back("missing " + origin_str(o.row, o.col));
  }
  if (!problems.empty()) {
    std::string msg = "assemble: coverage error:";
    for (const auto& s : problems) msg += " " + s + ";";
    throw ValidationError(msg);
  }
}

}  // namespace

ProbMap assemble(const std::vector<ProbMap>& patches, int height, int width) {
  check_coverage(patches, height, width);
  ProbMap out(height, width, 0.0f, GeoMeta{patches.front().meta().resolution_m_per_px, 0, 0});
  for (const auto& p : patches) {
    const int r0 = static_cast<int>(p.meta().origin_row);
    const int c0 = static_cast<int>(p.meta().origin_col);
    const int vr = std::min(p.height(), height - r0);
    const int vc = std::min(p.width(), width - c0);
    for (int r = 0; r < vr; ++r)
      for (int c = 0; c < vc; ++c) out.at(r0 + r, c0 + c) = p.at(r, c);
  }
  return out;
}

BinaryMask assemble(const std::vector<BinaryMask>& patches, int height, int width) {
  check_coverage(patches, height, width);
  BinaryMask out(height, width, false, GeoMeta{patches.front().meta().resolution_m_per_px, 0, 0});
  for (const auto& p : patches) {
    const int r0 = static_cast<int>(p.meta().origin_row);
    const int c0 = static_cast<int>(p.meta().origin_col);
    const int vr = std::min(p.height(), height - r0);
    const int vc = std::min(p.width(), width - c0);
    for (int r = 0; r < vr; ++r)
      for (int c = 0; c < vc; ++c) out.set(r0 + r, c0 + c, p.at(r, c));
  }
  return out;
}

Raster flip(const Raster& r, bool horizontal, bool vertical) {
  Raster out(r.height(), r.width(), r.channels(), r.meta());
  for (int y = 0; y < r.height(); ++y) {
    const int sy = vertical ? r.height() - 1 - y : y;
    for (int x = 0; x < r.width(); ++x) {
      const int sx = horizontal ? r.width() - 1 - x : x;
      for (int c = 0; c < r.channels(); ++c) out.at(y, x, c) = r.at(sy, sx, c);
    }
  }
  return out;
}

BinaryMask flip(const BinaryMask& m, bool horizontal, bool vertical) {
  BinaryMask out(m.height(), m.width(), false, m.meta());
  for (int y = 0; y < m.height(); ++y) {
    const int sy = vertical ? m.height() - 1 - y : y;
    for (int x = 0; x < m.width(); ++x) out.set(y, x, m.at(sy, horizontal ? m.width() - 1 - x : x));
  }
  return out;
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0,1]");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
}

DatasetSplit split_dataset(const std::vector<DatasetItem>& items, const SplitSpec& spec) {
  spec.validate();
  if (items.empty()) throw ValidationError("split_dataset: empty item list");

  // Groups keep first-appearance order of sources so the result does not
  // depend on string ordering.
  std::vector<std::string> source_order;
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& it : items) {
    const std::string key = spec.stratify_by_source ? it.source : std::string();
    auto [pos, inserted] = groups.try_emplace(key);
    if (inserted) source_order.push_back(key);
    pos->second.push_back(it.id);
  }

  DatasetSplit out;
  std::mt19937_64 gen(spec.rng_seed);
  for (const auto& src : source_order) {
    auto ids = groups[src];
    detail::shuffle_with(ids, gen);
    const std::size_t n = ids.size();
    auto n_val = static_cast<std::size_t>(std::llround(spec.val_frac * static_cast<double>(n)));
    auto n_test = static_cast<std::size_t>(std::llround(spec.test_frac * static_cast<double>(n)));
    if (n_val + n_test > n) n_test = n - std::min(n, n_val);
    const std::size_t n_train = n - n_val - n_test;
    out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
    out.val.insert(out.val.end(), ids.begin() + n_train, ids.begin() + n_train + n_val);
    out.test.insert(out.test.end(), ids.begin() + n_train + n_val, ids.end());
  }
  return out;
}

std::vector<std::string> oversample(const std::vector<std::string>& train_ids,
                                    const std::map<std::string, BinaryMask>& label_masks, std::size_t min_positive_px,
                                    int copies) {
  if (copies < 1) throw ValidationError("oversample: copies must be >= 1");
  std::vector<std::string> out;
  out.reserve(train_ids.size());
  for (const auto& id : train_ids) {
    auto it = label_masks.find(id);
    if (it == label_masks.end()) throw ValidationError("oversample: no label mask for id '" + id + "'");
    const int n = it->second.count() >= min_positive_px ? copies : 1;
    for (int k = 0; k < n; ++k) out.push_back(id);
  }
  return out;
}

std::string format_manifest(const std::vector<ManifestRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) {
    os << r.id << '\t' << r.source << '\t' << r.origin_row << '\t' << r.origin_col << '\t' << r.split << '\n';
  }
  return os.str();
}

std::vector<ManifestRecord> parse_manifest(const std::string& text) {
  std::vector<ManifestRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 5) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": expected 5 tab-separated fields");
    }
    ManifestRecord r;
    r.id = fields[0];
    r.source = fields[1];
    try {
      r.origin_row = std::stoi(fields[2]);
      r.origin_col = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": bad origin");
    }
    r.split = fields[4];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()));
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  write_text_atomic(path, format_manifest(records));
}

std::string patch_id(const std::string& stem, PatchOrigin origin) {
  return stem + "_r" + std::to_string(origin.row) + "_c" + std::to_string(origin.col);
}

}  // namespace rsv
