#include "rsv/fcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "json.hpp"
#include "rsv/detail/shuffle.hpp"
#include "rsv/error.hpp"
#include "rsv/io.hpp"

namespace rsv {

FloatImage to_float_image(const Raster& r) {
  FloatImage img(r.channels(), r.height(), r.width());
  for (int c = 0; c < r.channels(); ++c) {
    float* dst = img.channel(c);
    for (int y = 0; y < r.height(); ++y)
      for (int x = 0; x < r.width(); ++x) dst[static_cast<std::size_t>(y) * r.width() + x] = r.at(y, x, c) / 255.0f;
  }
  return img;
}

FloatImage flip(const FloatImage& img, bool horizontal, bool vertical) {
  FloatImage out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    const float* src = img.channel(c);
    float* dst = out.channel(c);
    for (int y = 0; y < img.height; ++y) {
      const int sy = vertical ? img.height - 1 - y : y;
      for (int x = 0; x < img.width; ++x) {
        const int sx = horizontal ? img.width - 1 - x : x;
        dst[static_cast<std::size_t>(y) * img.width + x] = src[static_cast<std::size_t>(sy) * img.width + sx];
      }
    }
  }
  return out;
}

void validate_widths(std::span<const int> widths) {
  if (widths.size() < 4 || widths.size() > 6) {
    throw ValidationError("TinyFcn needs 3 to 5 convolution layers (4 to 6 widths)");
  }
  if (widths.back() != 1) throw ValidationError("TinyFcn output width must be 1");
  for (int w : widths) {
    if (w < 1) throw ValidationError("TinyFcn widths must be positive");
  }
  if (widths.front() != 1 && widths.front() != 3) throw ValidationError("TinyFcn input width must be 1 or 3");
}

std::size_t fcn_param_count(std::span<const int> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    n += static_cast<std::size_t>(widths[l + 1]) * widths[l] * 9 + widths[l + 1];
  }
  return n;
}

namespace {

std::vector<float> init_params(std::span<const int> widths, std::uint64_t seed) {
  validate_widths(widths);
  std::mt19937_64 gen(seed);
  std::vector<float> p;
  p.reserve(fcn_param_count(widths));
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    // He-uniform on fan-in for ReLU layers.
    const double bound = std::sqrt(6.0 / (9.0 * in));
    for (int i = 0; i < out * in * 9; ++i) p.push_back(static_cast<float>((2.0 * detail::draw_unit(gen) - 1.0) * bound));
    for (int i = 0; i < out; ++i) p.push_back(0.0f);
  }
  return p;
}

template <class T>
struct Layer {
  int in;
  int out;
  const T* w;  // [out][in][3][3]
  const T* b;
};

template <class T>
std::vector<Layer<T>> layers_of(std::span<const int> widths, std::span<const T> params) {
  validate_widths(widths);
  if (params.size() != fcn_param_count(widths)) throw ValidationError("TinyFcn parameter count mismatch");
  std::vector<Layer<T>> ls;
  const T* p = params.data();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer<T> layer{widths[l], widths[l + 1], p, nullptr};
    p += static_cast<std::size_t>(layer.out) * layer.in * 9;
    layer.b = p;
    p += layer.out;
    ls.push_back(layer);
  }
  return ls;
}

// Column range [x0, x1) of output pixels whose tap kx lands inside the row.
inline void tap_range(int kx, int width, int& x0, int& x1) {
  x0 = std::max(0, 1 - kx);
  x1 = std::min(width, width + 1 - kx);
}

template <class T>
void conv_forward(const Layer<T>& L, const Image<T>& in, Image<T>& out) {
  const int h = in.height;
  const int w = in.width;
  out = Image<T>(L.out, h, w);
  for (int o = 0; o < L.out; ++o) {
    T* dst = out.channel(o);
    std::fill(dst, dst + out.plane(), L.b[o]);
    for (int i = 0; i < L.in; ++i) {
      const T* src = in.channel(i);
      const T* k = L.w + (static_cast<std::size_t>(o) * L.in + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky);
        const int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const T wk = k[ky * 3 + kx];
          int x0, x1;
          tap_range(kx, w, x0, x1);
          for (int y = y0; y < y1; ++y) {
            T* drow = dst + static_cast<std::size_t>(y) * w;
            const T* srow = src + static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
            for (int x = x0; x < x1; ++x) drow[x] += wk * srow[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients into gw/gb (double) and, if din != null,
// the input gradient.
template <class T>
void conv_backward(const Layer<T>& L, const Image<T>& in, const Image<T>& dz, double* gw, double* gb, Image<T>* din) {
  const int h = in.height;
  const int w = in.width;
  if (din) *din = Image<T>(L.in, h, w);
  for (int o = 0; o < L.out; ++o) {
    const T* g = dz.channel(o);
    double bsum = 0.0;
    for (int y = 0; y < h; ++y) {
      T rs = 0;
      const T* grow = g + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) rs += grow[x];
      bsum += static_cast<double>(rs);
    }
    gb[o] += bsum;
    for (int i = 0; i < L.in; ++i) {
      const T* src = in.channel(i);
      const T* k = L.w + (static_cast<std::size_t>(o) * L.in + i) * 9;
      double* gk = gw + (static_cast<std::size_t>(o) * L.in + i) * 9;
      T* dsrc = din ? din->channel(i) : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky);
        const int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          int x0, x1;
          tap_range(kx, w, x0, x1);
          const T wk = k[ky * 3 + kx];
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const T* grow = g + static_cast<std::size_t>(y) * w;
            const std::size_t off = static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
            const T* srow = src + off;
            T rs = 0;
            for (int x = x0; x < x1; ++x) rs += grow[x] * srow[x];
            acc += static_cast<double>(rs);
            if (dsrc) {
              T* drow = dsrc + off;
              for (int x = x0; x < x1; ++x) drow[x] += wk * grow[x];
            }
          }
          gk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

template <class T>
Image<T> convert_input(const FloatImage& x) {
  Image<T> out(x.channels, x.height, x.width);
  std::copy(x.data.begin(), x.data.end(), out.data.begin());
  return out;
}

template <class T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

/// Forward pass keeping every layer's input (post-activation) and the final
/// probabilities.
template <class T>
std::vector<T> forward_cached(const std::vector<Layer<T>>& ls, const FloatImage& x, std::vector<Image<T>>* acts) {
  Image<T> a = convert_input<T>(x);
  if (x.channels != ls.front().in) throw ValidationError("TinyFcn: input has wrong channel count");
  if (x.height < 1 || x.width < 1) throw ValidationError("TinyFcn: empty input");
  Image<T> z;
  for (std::size_t l = 0; l < ls.size(); ++l) {
    conv_forward(ls[l], a, z);
    if (acts) acts->push_back(std::move(a));
    if (l + 1 < ls.size()) {
      for (auto& v : z.data) v = v > T(0) ? v : T(0);
      a = std::move(z);
    }
  }
  std::vector<T> p(z.data.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(z.data[i]);
  return p;
}

}  // namespace

TinyFcn::TinyFcn(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)), seed_(seed), params_(init_params(widths_, seed_)) {}

TinyFcn::TinyFcn(std::vector<int> widths, std::uint64_t seed, std::vector<float> params)
    : widths_(std::move(widths)), seed_(seed), params_(std::move(params)) {
  validate_widths(widths_);
  if (params_.size() != fcn_param_count(widths_)) throw ValidationError("TinyFcn parameter count mismatch");
}

std::vector<float> TinyFcn::forward(const FloatImage& x) const { return fcn_forward<float>(widths_, params_, x); }

ProbMap TinyFcn::predict(const Raster& patch) const {
  auto p = forward(to_float_image(patch));
  for (auto& v : p) v = std::clamp(v, 0.0f, 1.0f);
  return ProbMap(patch.height(), patch.width(), std::move(p), patch.meta());
}

template <class T>
std::vector<T> fcn_forward(std::span<const int> widths, std::span<const T> params, const FloatImage& x) {
  return forward_cached<T>(layers_of<T>(widths, params), x, nullptr);
}

template <class T>
double fcn_loss_and_gradient(std::span<const int> widths, std::span<const T> params,
                             std::span<const TrainSample> samples, LossId loss, const LossParams& loss_params,
                             std::span<double> grad) {
  if (samples.empty()) throw ValidationError("empty minibatch");
  const auto ls = layers_of<T>(widths, params);
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != params.size()) throw ValidationError("gradient buffer size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  // Offsets of each layer's weights and biases inside the flat vector.
  std::vector<std::size_t> w_off, b_off;
  std::size_t off = 0;
  for (const auto& L : ls) {
    w_off.push_back(off);
    off += static_cast<std::size_t>(L.out) * L.in * 9;
    b_off.push_back(off);
    off += L.out;
  }

  double total = 0.0;
  std::vector<Image<T>> acts;
  for (const auto& s : samples) {
    acts.clear();
    const std::vector<T> p = forward_cached<T>(ls, s.image, want_grad ? &acts : nullptr);
    if (s.label.height() != s.image.height || s.label.width() != s.image.width) {
      throw ValidationError("label mask does not match image size");
    }
    PixelBatch batch;
    batch.p.assign(p.begin(), p.end());
    for (auto& v : batch.p) v = std::clamp(v, 0.0, 1.0);
    batch.y = s.label.bits();
    if (s.valid.size() != 0) batch.include = s.valid.bits();
    const double l = evaluate_loss(loss, batch, loss_params);
    if (!std::isfinite(l)) throw NumericError("non-finite loss");
    total += l;
    if (!want_grad) continue;

    const std::vector<double> dp = loss_gradient(loss, batch, loss_params);
    Image<T> dz(1, s.image.height, s.image.width);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      const double pi = static_cast<double>(p[i]);
      dz.data[i] = static_cast<T>(dp[i] * pi * (1.0 - pi));
    }
    for (std::size_t l_idx = ls.size(); l_idx-- > 0;) {
      const auto& L = ls[l_idx];
      Image<T> din;
      conv_backward(L, acts[l_idx], dz, grad.data() + w_off[l_idx], grad.data() + b_off[l_idx],
                    l_idx > 0 ? &din : nullptr);
      if (l_idx == 0) break;
      // ReLU: acts[l_idx] is the post-activation input of this layer.
      const auto& a = acts[l_idx].data;
      for (std::size_t i = 0; i < din.data.size(); ++i) {
        if (!(a[i] > T(0))) din.data[i] = T(0);
      }
      dz = std::move(din);
    }
  }
  const double n = static_cast<double>(samples.size());
  if (want_grad) {
    for (auto& g : grad) g /= n;
    for (double g : grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient");
    }
  }
  return total / n;
}

template std::vector<float> fcn_forward<float>(std::span<const int>, std::span<const float>, const FloatImage&);
template std::vector<double> fcn_forward<double>(std::span<const int>, std::span<const double>, const FloatImage&);
template double fcn_loss_and_gradient<float>(std::span<const int>, std::span<const float>,
                                             std::span<const TrainSample>, LossId, const LossParams&,
                                             std::span<double>);
template double fcn_loss_and_gradient<double>(std::span<const int>, std::span<const double>,
                                              std::span<const TrainSample>, LossId, const LossParams&,
                                              std::span<double>);

std::vector<double> backprop_gradients(const TinyFcn& model, std::span<const TrainSample> batch, LossId loss,
                                       const LossParams& loss_params) {
  std::vector<double> g(model.param_count());
  fcn_loss_and_gradient<float>(model.widths(), model.params(), batch, loss, loss_params, g);
  return g;
}

void save_checkpoint(const TinyFcn& model, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(model.param_count() * sizeof(float));
  std::memcpy(bytes.data(), model.params().data(), bytes.size());
  write_file_atomic(path, bytes);
  nlohmann::json j{{"model", "tiny_fcn"},
                   {"widths", model.widths()},
                   {"seed", model.seed()},
                   {"param_count", model.param_count()}};
  write_text_atomic(sidecar_path(path), j.dump() + "\n");
}

TinyFcn load_checkpoint(const std::filesystem::path& path) {
  const auto header_bytes = read_file_bytes(sidecar_path(path));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what(), e.byte);
  }
  if (!j.contains("widths") || !j["widths"].is_array()) throw ValidationError("checkpoint header missing 'widths'");
  const auto widths = j["widths"].get<std::vector<int>>();
  const auto seed = j.value("seed", std::uint64_t{0});
  validate_widths(widths);
  const auto bytes = read_file_bytes(path);
  const std::size_t n = fcn_param_count(widths);
  if (bytes.size() != n * sizeof(float)) {
    throw ValidationError("checkpoint payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(n * sizeof(float)));
  }
  std::vector<float> params(n);
  std::memcpy(params.data(), bytes.data(), bytes.size());
  return TinyFcn(widths, seed, std::move(params));
}

}  // namespace rsv
