#include "rsv/backend.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "rsv/error.hpp"
#include "rsv/io.hpp"
#include "rsv/tiling.hpp"

namespace rsv {

namespace fs = std::filesystem;

ProbMap FcnBackend::predict(const Raster& patch, const std::string&) const { return model_.predict(patch); }

ExternalBackend::ExternalBackend(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw IoError("external backend directory not found: " + dir_.string());
}

ProbMap ExternalBackend::predict(const Raster& patch, const std::string& patch_id) const {
  const fs::path file = dir_ / (patch_id + ".f32");
  if (!fs::exists(file)) throw IoError("external backend has no map for patch '" + patch_id + "' (" + file.string() + ")");
  ProbMap p = read_prob_map(file);
  if (p.height() != patch.height() || p.width() != patch.width()) {
    throw ValidationError("external map for '" + patch_id + "' is " + std::to_string(p.height()) + "x" +
                          std::to_string(p.width()) + ", patch is " + std::to_string(patch.height()) + "x" +
                          std::to_string(patch.width()));
  }
  p.meta() = patch.meta();
  return p;
}

std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (arg.empty()) throw ValidationError("backend spec '" + spec + "' must be external:<dir> or fcn:<checkpoint>");
  if (kind == "external") return std::make_unique<ExternalBackend>(arg);
  if (kind == "fcn") return std::make_unique<FcnBackend>(load_checkpoint(arg));
  throw ValidationError("unknown backend kind '" + kind + "' (expected external|fcn)");
}

ProbMap predict_tiled(const SegmenterBackend& backend, const Raster& mosaic, int patch_height, int patch_width,
                      const std::string& stem, int jobs) {
  const PatchGrid grid = PatchGrid::make(mosaic.height(), mosaic.width(), patch_height, patch_width);
  const std::vector<Raster> patches = extract_patches(mosaic, patch_height, patch_width);
  std::vector<ProbMap> maps(patches.size());

  auto run_one = [&](std::size_t i) {
    ProbMap p = backend.predict(patches[i], patch_id(stem, grid.patches[i]));
    if (p.height() != patch_height || p.width() != patch_width) {
      throw ValidationError("backend returned a map of the wrong size for patch " + std::to_string(i));
    }
    p.validate();
    const int vr = grid.valid_rows(i);
    const int vc = grid.valid_cols(i);
    for (int r = 0; r < patch_height; ++r)
      for (int c = 0; c < patch_width; ++c)
        if (r >= vr || c >= vc) p.at(r, c) = 0.0f;
    p.meta() = patches[i].meta();
    maps[i] = std::move(p);
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(patches.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < patches.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
      std::vector<std::jthread> pool;
      for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i; (i = next.fetch_add(1)) < patches.size();) {
            try {
              run_one(i);
            } catch (...) {
              std::lock_guard lock(failure_mu);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  ProbMap out = assemble(maps, mosaic.height(), mosaic.width());
  out.meta() = mosaic.meta();
  return out;
}

}  // namespace rsv
