#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rsv/losses.hpp"
#include "rsv/raster.hpp"

namespace rsv {

/// Planar (channel-major) image of reals.
template <class T>
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Image() = default;
  Image(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, T(0)) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  T* channel(int c) { return data.data() + c * plane(); }
  const T* channel(int c) const { return data.data() + c * plane(); }
};

using FloatImage = Image<float>;

/// 8-bit raster to planar [0,1] floats.
FloatImage to_float_image(const Raster& r);
FloatImage flip(const FloatImage& img, bool horizontal, bool vertical);

/// One training example: image, binary label, and the pixels that count.
struct TrainSample {
  FloatImage image;
  BinaryMask label;
  BinaryMask valid;  // empty (0×0) means every pixel counts
};

/// Fully convolutional stack of 3×3, stride-1, zero-padded convolutions with
/// ReLU between layers and a sigmoid on the single output channel.
///
/// Parameters live in one flat float vector: for each layer, weights laid out
/// [out][in][ky][kx], followed by that layer's biases.
class TinyFcn {
 public:
  static std::vector<int> default_widths() { return {3, 8, 16, 8, 1}; }

  explicit TinyFcn(std::vector<int> widths = default_widths(), std::uint64_t seed = 0);
  TinyFcn(std::vector<int> widths, std::uint64_t seed, std::vector<float> params);

  const std::vector<int>& widths() const { return widths_; }
  std::uint64_t seed() const { return seed_; }
  int input_channels() const { return widths_.front(); }
  std::size_t param_count() const { return params_.size(); }
  std::span<float> params() { return params_; }
  std::span<const float> params() const { return params_; }

  /// Per-pixel probabilities, row-major H×W.
  std::vector<float> forward(const FloatImage& x) const;
  ProbMap predict(const Raster& patch) const;

 private:
  std::vector<int> widths_;
  std::uint64_t seed_ = 0;
  std::vector<float> params_;
};

std::size_t fcn_param_count(std::span<const int> widths);
void validate_widths(std::span<const int> widths);

/// Forward pass at precision T (activations and weights).
template <class T>
std::vector<T> fcn_forward(std::span<const int> widths, std::span<const T> params, const FloatImage& x);

/// Mean loss over `samples` and, when `grad` is non-empty, its gradient
/// w.r.t. every parameter (overwritten). Activations run at precision T;
/// loss and gradient sums are accumulated in double.
template <class T>
double fcn_loss_and_gradient(std::span<const int> widths, std::span<const T> params,
                             std::span<const TrainSample> samples, LossId loss, const LossParams& loss_params,
                             std::span<double> grad);

/// Gradient of the mean minibatch loss for the model's float parameters.
std::vector<double> backprop_gradients(const TinyFcn& model, std::span<const TrainSample> batch, LossId loss,
                                       const LossParams& loss_params = {});

/// Flat float32 parameters in `<path>` (.f32) plus a JSON header alongside.
void save_checkpoint(const TinyFcn& model, const std::filesystem::path& path);
TinyFcn load_checkpoint(const std::filesystem::path& path);

}  // namespace rsv
