#pragma once

// Core image and tensor types shared by every stage of the pipeline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "llenhance/error.hpp"

namespace llenhance {

/// Planar row-major float tensor of shape (channels, height, width).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, float fill = 0.0f)
      : channels_(channels), height_(height), width_(width) {
    if (channels < 0 || height < 0 || width < 0) {
      throw InvalidArgument("Tensor: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
  }
  Tensor(int channels, int height, int width, std::vector<float> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
      throw InvalidArgument("Tensor: data length does not match shape");
    }
  }

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

  std::span<float> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Tensor& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// RGB image with samples in [0,1]. The invariant is checked on construction.
class Frame {
 public:
  Frame() = default;

  /// Black frame.
  Frame(int width, int height) : pixels_(3, height, width) {
    if (width < 1 || height < 1) throw InvalidArgument("Frame: dimensions must be >= 1");
  }

  /// Takes ownership of a 3-channel tensor; throws if any sample is non-finite or outside [0,1].
  explicit Frame(Tensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.channels() != 3) throw InvalidArgument("Frame: expected 3 channels");
    if (pixels_.width() < 1 || pixels_.height() < 1) {
      throw InvalidArgument("Frame: dimensions must be >= 1");
    }
    for (float v : pixels_.data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("Frame: sample outside [0,1] or non-finite");
    }
  }

  /// Clamps into [0,1] instead of rejecting; NaN still throws.
  static Frame clamped(Tensor pixels) {
    for (float& v : pixels.data()) {
      if (std::isnan(v)) throw InvalidArgument("Frame: NaN sample");
      v = std::clamp(v, 0.0f, 1.0f);
    }
    return Frame(std::move(pixels));
  }

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  float at(int c, int y, int x) const noexcept { return pixels_.at(c, y, x); }
  std::span<const float> plane(int c) const noexcept { return pixels_.plane(c); }
  const Tensor& tensor() const noexcept { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  Tensor pixels_;
};

/// Mirror an out-of-range index back into [0, n) (edge sample not repeated).
/// Folds repeatedly, so any offset is valid; n == 1 always maps to 0.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace detail {

struct Footprint {
  int first = 0;
  std::vector<double> weights;
};

// Source coverage of each destination cell along one axis, normalised to sum 1.
inline std::vector<Footprint> area_footprints(int src, int dst) {
  std::vector<Footprint> out(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    out[i].first = first;
    for (int j = first; j <= last; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      out[i].weights.push_back(std::max(overlap, 0.0) / scale);
    }
  }
  return out;
}

}  // namespace detail

/// Area-averaging downsample: each output sample integrates its exact
/// fractional source footprint. Only shrinking (or equal size) is supported.
inline Tensor resize_area(const Tensor& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidArgument("resize_area: zero output dimension");
  if (out_h > src.height() || out_w > src.width()) {
    throw InvalidArgument("resize_area: upsampling is not supported");
  }
  const auto rows = detail::area_footprints(src.height(), out_h);
  const auto cols = detail::area_footprints(src.width(), out_w);

  Tensor out(src.channels(), out_h, out_w);
  std::vector<double> row_acc(src.width());
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      std::fill(row_acc.begin(), row_acc.end(), 0.0);
      const auto& fy = rows[y];
      for (std::size_t k = 0; k < fy.weights.size(); ++k) {
        const int sy = fy.first + static_cast<int>(k);
        for (int x = 0; x < src.width(); ++x) row_acc[x] += fy.weights[k] * src.at(c, sy, x);
      }
      for (int x = 0; x < out_w; ++x) {
        const auto& fx = cols[x];
        double acc = 0.0;
        for (std::size_t k = 0; k < fx.weights.size(); ++k) acc += fx.weights[k] * row_acc[fx.first + k];
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

/// [0,1] -> [-1,1]
inline Tensor to_model_domain(Tensor x) {
  for (float& v : x.data()) v = 2.0f * v - 1.0f;
  return x;
}

/// [-1,1] -> [0,1], clamped.
inline Tensor from_model_domain(Tensor x) {
  for (float& v : x.data()) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  return x;
}

/// Rec.601 luma plane as a 1-channel tensor.
inline Tensor luma(const Frame& f) {
  Tensor out(1, f.height(), f.width());
  const auto r = f.plane(0), g = f.plane(1), b = f.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  return out;
}

/// Copies channels [first, first+count) of a region of `src`.
inline Tensor crop(const Tensor& src, int x0, int y0, int w, int h, int first = 0, int count = -1) {
  if (count < 0) count = src.channels() - first;
  if (x0 < 0 || y0 < 0 || x0 + w > src.width() || y0 + h > src.height() || first < 0 ||
      first + count > src.channels()) {
    throw InvalidArgument("crop: window outside tensor");
  }
  Tensor out(count, h, w);
  for (int c = 0; c < count; ++c) {
    for (int y = 0; y < h; ++y) {
      const float* s = &src.data()[(static_cast<std::size_t>(first + c) * src.height() + y0 + y) * src.width() + x0];
      std::copy(s, s + w, &out.at(c, y, 0));
    }
  }
  return out;
}

}  // namespace llenhance
