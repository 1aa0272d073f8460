#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "rsv/fcn.hpp"
#include "rsv/raster.hpp"

namespace rsv {

/// Anything that maps an image patch to a same-sized probability map.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  /// `patch_id` names the patch (see patch_id()); backends that compute from
  /// pixels may ignore it. Must be safe to call concurrently.
  virtual ProbMap predict(const Raster& patch, const std::string& patch_id) const = 0;
};

class FcnBackend final : public SegmenterBackend {
 public:
  explicit FcnBackend(TinyFcn model) : model_(std::move(model)) {}
  ProbMap predict(const Raster& patch, const std::string& patch_id) const override;
  const TinyFcn& model() const { return model_; }

 private:
  TinyFcn model_;
};

/// Serves precomputed maps `<dir>/<patch_id>.f32` (+ `.json`), e.g. produced
/// by a full-scale model in another framework.
class ExternalBackend final : public SegmenterBackend {
 public:
  explicit ExternalBackend(std::filesystem::path dir);
  ProbMap predict(const Raster& patch, const std::string& patch_id) const override;

 private:
  std::filesystem::path dir_;
};

/// `external:<dir>` or `fcn:<checkpoint.f32>`.
std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec);

/// Tiles the mosaic, predicts every patch (up to `jobs` at a time), zeroes
/// the padding and reassembles. Patch ids are patch_id(stem, origin).
ProbMap predict_tiled(const SegmenterBackend& backend, const Raster& mosaic, int patch_height, int patch_width,
                      const std::string& stem = "patch", int jobs = 1);

}  // namespace rsv
