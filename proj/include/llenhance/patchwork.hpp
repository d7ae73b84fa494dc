#pragma once

// Overlapping tile layouts, 6-channel local/region patch extraction, and
// Gaussian-weighted merging of processed local tiles back into a frame.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "llenhance/error.hpp"
#include "llenhance/image.hpp"

namespace llenhance {

struct PatchConfig {
  int local_size = 360;
  int region_size = 1000;

  void validate() const {
    if (local_size < 2 || local_size % 2 != 0) throw InvalidArgument("local patch size must be even and >= 2");
    if (region_size <= local_size) throw InvalidArgument("region patch size must exceed local patch size");
  }
  int stride() const noexcept { return local_size / 2; }
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(Point, Point) = default;
};

struct TileLayout {
  int width = 0;
  int height = 0;
  int tile_size = 0;
  std::vector<Point> origins;  // row-major
};

/// Axis origins 0, s, 2s, ... with a final origin clamped to dim - tile.
inline std::vector<int> axis_origins(int dim, int tile) {
  std::vector<int> out;
  const int last = dim - tile;
  for (int o = 0; o <= last; o += tile / 2) out.push_back(o);
  if (out.back() != last) out.push_back(last);
  return out;
}

inline TileLayout compute_layout(int width, int height, const PatchConfig& cfg) {
  cfg.validate();
  if (width < cfg.local_size || height < cfg.local_size) {
    throw InvalidArgument("frame " + std::to_string(width) + "x" + std::to_string(height) +
                          " is smaller than the local patch size " + std::to_string(cfg.local_size));
  }
  TileLayout layout{width, height, cfg.local_size, {}};
  const auto xs = axis_origins(width, cfg.local_size);
  const auto ys = axis_origins(height, cfg.local_size);
  layout.origins.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) layout.origins.push_back({x, y});
  }
  return layout;
}

struct PatchPair {
  Point origin;
  Tensor tensor;  // (6, N_l, N_l): local RGB then resized region RGB
};

/// Top-left corner of the region window for a local tile at `origin`, along
/// one axis: centred on the local tile, then shifted inside the frame. When
/// the frame is smaller than the region, the frame is reflect-padded evenly
/// and the returned origin is negative (the padding offset).
inline int region_origin(int local_origin, int dim, const PatchConfig& cfg) {
  if (dim < cfg.region_size) return -((cfg.region_size - dim) / 2);
  const int ideal = local_origin + cfg.local_size / 2 - cfg.region_size / 2;
  return std::clamp(ideal, 0, dim - cfg.region_size);
}

inline PatchPair extract_pair(const Frame& frame, Point origin, const PatchConfig& cfg) {
  cfg.validate();
  const int n = cfg.local_size, r = cfg.region_size;
  if (origin.x < 0 || origin.y < 0 || origin.x + n > frame.width() || origin.y + n > frame.height()) {
    throw InvalidArgument("extract_pair: origin out of bounds");
  }
  const Tensor& src = frame.tensor();
  const Tensor local = crop(src, origin.x, origin.y, n, n);

  const int rx = region_origin(origin.x, frame.width(), cfg);
  const int ry = region_origin(origin.y, frame.height(), cfg);
  Tensor region(3, r, r);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < r; ++y) {
      const int sy = reflect_index(ry + y, frame.height());
      for (int x = 0; x < r; ++x) region.at(c, y, x) = src.at(c, sy, reflect_index(rx + x, frame.width()));
    }
  }
  const Tensor small = resize_area(region, n, n);

  Tensor pair(6, n, n);
  auto out = pair.data();
  std::copy(local.data().begin(), local.data().end(), out.begin());
  std::copy(small.data().begin(), small.data().end(), out.begin() + static_cast<std::ptrdiff_t>(local.size()));
  return {origin, std::move(pair)};
}

/// Unnormalised Gaussian tile weights evaluated at pixel centres.
class WeightMap {
 public:
  explicit WeightMap(int size) : size_(size), w_(static_cast<std::size_t>(size) * size) {
    if (size < 2) throw InvalidArgument("gaussian weights need size >= 2");
    const double mu = size / 2.0;
    const double sigma = size / 6.0;
    std::vector<double> axis(size);
    for (int i = 0; i < size; ++i) {
      const double d = i + 0.5 - mu;
      axis[i] = d * d;
    }
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) w_[y * size + x] = std::exp(-(axis[x] + axis[y]) / (2.0 * sigma * sigma));
    }
  }
  int size() const noexcept { return size_; }
  double at(int x, int y) const noexcept { return w_[static_cast<std::size_t>(y) * size_ + x]; }

 private:
  int size_;
  std::vector<double> w_;
};

inline WeightMap gaussian_weights(int size) { return WeightMap(size); }

/// Streaming weighted-mean accumulator. Tiles may arrive in any order; the
/// result differs across orders only by floating-point accumulation.
class TileMerger {
 public:
  TileMerger(int width, int height, WeightMap weights)
      : width_(width), height_(height), weights_(std::move(weights)),
        sum_(static_cast<std::size_t>(width) * height * 3, 0.0),
        norm_(static_cast<std::size_t>(width) * height, 0.0) {}

  void add(Point origin, const Tensor& rgb) {
    const int n = weights_.size();
    if (rgb.channels() < 3 || rgb.height() != n || rgb.width() != n) {
      throw InvalidArgument("merge: tile shape does not match weight map");
    }
    if (origin.x < 0 || origin.y < 0 || origin.x + n > width_ || origin.y + n > height_) {
      throw InvalidArgument("merge: tile outside frame");
    }
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    for (int y = 0; y < n; ++y) {
      const std::size_t row = static_cast<std::size_t>(origin.y + y) * width_ + origin.x;
      for (int x = 0; x < n; ++x) {
        const double w = weights_.at(x, y);
        norm_[row + x] += w;
        for (int c = 0; c < 3; ++c) sum_[c * plane + row + x] += w * rgb.at(c, y, x);
      }
    }
  }

  Frame finish() const {
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    Tensor out(3, height_, width_);
    auto dst = out.data();
    for (std::size_t i = 0; i < plane; ++i) {
      if (!(norm_[i] > 0.0)) {
        throw InvalidArgument("merge: pixel (" + std::to_string(i % width_) + "," + std::to_string(i / width_) +
                              ") is covered by no tile");
      }
      for (int c = 0; c < 3; ++c) dst[c * plane + i] = static_cast<float>(sum_[c * plane + i] / norm_[i]);
    }
    return Frame::clamped(std::move(out));
  }

 private:
  int width_;
  int height_;
  WeightMap weights_;
  std::vector<double> sum_;
  std::vector<double> norm_;
};

struct Tile {
  Point origin;
  Tensor rgb;  // (>=3, N_l, N_l); channels past 2 are ignored
};

inline Frame merge(std::span<const Tile> tiles, int width, int height, const WeightMap& weights) {
  TileMerger merger(width, height, weights);
  for (const auto& t : tiles) merger.add(t.origin, t.rgb);
  return merger.finish();
}

}  // namespace llenhance
