#pragma once

// Flicker removal: global pre-alignment, Haar-pyramid block matching,
// bilinear warping, and per-pixel adaptive temporal averaging.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "llenhance/error.hpp"
#include "llenhance/image.hpp"
#include "llenhance/parallel.hpp"

namespace llenhance {

// ---------------------------------------------------------------------------
// Haar wavelet

struct HaarBands {
  Tensor ll, lh, hl, hh;
};

/// Single-level orthonormal Haar analysis of a 1-channel plane. Odd sides are
/// first extended by one reflected row/column.
inline HaarBands dwt2(const Tensor& plane) {
  if (plane.channels() != 1) throw InvalidArgument("dwt2: expected a single plane");
  if (plane.width() == 0 || plane.height() == 0) throw InvalidArgument("dwt2: empty plane");
  const int h = (plane.height() + 1) / 2, w = (plane.width() + 1) / 2;
  HaarBands out{Tensor(1, h, w), Tensor(1, h, w), Tensor(1, h, w), Tensor(1, h, w)};
  const int ph = plane.height(), pw = plane.width();
  for (int y = 0; y < h; ++y) {
    const int y0 = 2 * y, y1 = reflect_index(2 * y + 1, ph);
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x, x1 = reflect_index(2 * x + 1, pw);
      const float a = plane.at(0, y0, x0), b = plane.at(0, y0, x1);
      const float c = plane.at(0, y1, x0), d = plane.at(0, y1, x1);
      out.ll.at(0, y, x) = 0.5f * (a + b + c + d);
      out.lh.at(0, y, x) = 0.5f * (a - b + c - d);
      out.hl.at(0, y, x) = 0.5f * (a + b - c - d);
      out.hh.at(0, y, x) = 0.5f * (a - b - c + d);
    }
  }
  return out;
}

/// Inverse of dwt2; returns the (even-sided) padded plane.
inline Tensor idwt2(const HaarBands& bands) {
  const int h = bands.ll.height(), w = bands.ll.width();
  if (!bands.ll.same_shape(bands.lh) || !bands.ll.same_shape(bands.hl) || !bands.ll.same_shape(bands.hh)) {
    throw InvalidArgument("idwt2: subband shapes differ");
  }
  Tensor out(1, 2 * h, 2 * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float s = bands.ll.at(0, y, x), p = bands.lh.at(0, y, x);
      const float q = bands.hl.at(0, y, x), r = bands.hh.at(0, y, x);
      out.at(0, 2 * y, 2 * x) = 0.5f * (s + p + q + r);
      out.at(0, 2 * y, 2 * x + 1) = 0.5f * (s - p + q - r);
      out.at(0, 2 * y + 1, 2 * x) = 0.5f * (s + p - q - r);
      out.at(0, 2 * y + 1, 2 * x + 1) = 0.5f * (s - p - q + r);
    }
  }
  return out;
}

/// Repeated analysis of the LL band. levels[0] is the first decomposition.
struct WaveletPyramid {
  std::vector<HaarBands> levels;

  static WaveletPyramid build(const Tensor& plane, int depth) {
    WaveletPyramid p;
    p.levels.reserve(static_cast<std::size_t>(std::max(depth, 0)));
    const Tensor* current = &plane;
    for (int l = 0; l < depth; ++l) {
      p.levels.push_back(dwt2(*current));
      current = &p.levels.back().ll;
    }
    return p;
  }
};

namespace detail {

// Level planes for coarse-to-fine search: [0] is the input, [l] is LL_l / 2^l
// so every level keeps the input's intensity scale.
inline std::vector<Tensor> intensity_pyramid(const Tensor& plane, int depth) {
  std::vector<Tensor> out{plane};
  for (int l = 0; l < depth; ++l) {
    Tensor ll = dwt2(out.back()).ll;
    for (float& v : ll.data()) v *= 0.5f;
    out.push_back(std::move(ll));
  }
  return out;
}

inline bool inside(double x, double y, int w, int h) {
  constexpr double tol = 1e-6;
  return x >= -tol && y >= -tol && x <= w - 1 + tol && y <= h - 1 + tol;
}

// Bilinear sample; caller guarantees (x, y) is inside.
inline float sample(const float* p, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = p[y0 * w + x0] + fx * (p[y0 * w + x1] - p[y0 * w + x0]);
  const double bottom = p[y1 * w + x0] + fx * (p[y1 * w + x1] - p[y1 * w + x0]);
  return static_cast<float>(top + fy * (bottom - top));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Global pre-alignment

struct GlobalShift {
  double dx = 0.0;
  double dy = 0.0;
  bool confident = true;
};

/// Global translation d with tgt(p + d) ~ ref(p), on luma. An exhaustive
/// integer search at the coarsest level seeds Gauss-Newton refinement at
/// every level of a 2x pyramid.
inline GlobalShift prealign(const Frame& ref, const Frame& tgt, int levels) {
  if (ref.width() != tgt.width() || ref.height() != tgt.height()) {
    throw InvalidArgument("prealign: frame dimensions differ");
  }
  if (levels < 1) throw InvalidArgument("prealign: levels must be >= 1");
  // Stop shrinking before the coarsest plane gets too small to be useful.
  int depth = levels - 1;
  while (depth > 0 && std::min(ref.width(), ref.height()) >> depth < 16) --depth;
  const auto rp = detail::intensity_pyramid(luma(ref), depth);
  const auto tp = detail::intensity_pyramid(luma(tgt), depth);

  double dx = 0.0, dy = 0.0;
  {
    const Tensor& r = rp[depth];
    const Tensor& t = tp[depth];
    const int w = r.width(), h = r.height();
    const int radius = std::min(4, std::min(w, h) / 4);
    double best = std::numeric_limits<double>::infinity();
    // Candidates in order of growing |d| so ties keep the smaller shift.
    std::vector<std::array<int, 2>> cands;
    for (int oy = -radius; oy <= radius; ++oy) {
      for (int ox = -radius; ox <= radius; ++ox) cands.push_back({ox, oy});
    }
    std::stable_sort(cands.begin(), cands.end(), [](auto a, auto b) {
      return a[0] * a[0] + a[1] * a[1] < b[0] * b[0] + b[1] * b[1];
    });
    for (auto [ox, oy] : cands) {
      double ssd = 0.0;
      std::size_t n = 0;
      for (int y = std::max(0, -oy); y < std::min(h, h - oy); ++y) {
        for (int x = std::max(0, -ox); x < std::min(w, w - ox); ++x) {
          const double d = t.at(0, y + oy, x + ox) - r.at(0, y, x);
          ssd += d * d;
          ++n;
        }
      }
      if (n == 0) continue;
      if (ssd / n < best) {
        best = ssd / n;
        dx = ox;
        dy = oy;
      }
    }
  }

  bool confident = true;
  for (int l = depth; l >= 0; --l) {
    if (l != depth) {
      dx *= 2.0;
      dy *= 2.0;
    }
    const Tensor& r = rp[l];
    const Tensor& t = tp[l];
    const int w = r.width(), h = r.height();
    // Central-difference gradients of the target.
    Tensor gx(1, h, w), gy(1, h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        gx.at(0, y, x) = 0.5f * (t.at(0, y, std::min(x + 1, w - 1)) - t.at(0, y, std::max(x - 1, 0)));
        gy.at(0, y, x) = 0.5f * (t.at(0, std::min(y + 1, h - 1), x) - t.at(0, std::max(y - 1, 0), x));
      }
    }
    for (int iter = 0; iter < 20; ++iter) {
      double hxx = 0, hxy = 0, hyy = 0, bx = 0, by = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double qx = x + dx, qy = y + dy;
          if (qx < 1 || qy < 1 || qx > w - 2 || qy > h - 2) continue;
          const double res = detail::sample(t.data().data(), w, h, qx, qy) - r.at(0, y, x);
          const double ex = detail::sample(gx.data().data(), w, h, qx, qy);
          const double ey = detail::sample(gy.data().data(), w, h, qx, qy);
          hxx += ex * ex;
          hxy += ex * ey;
          hyy += ey * ey;
          bx += ex * res;
          by += ey * res;
        }
      }
      const double det = hxx * hyy - hxy * hxy;
      const double trace = hxx + hyy;
      if (!(trace > 1e-9) || det <= 1e-6 * trace * trace) {
        if (l == 0 && iter == 0) confident = false;
        break;
      }
      const double ux = -(hyy * bx - hxy * by) / det;
      const double uy = -(hxx * by - hxy * bx) / det;
      dx += std::clamp(ux, -1.0, 1.0);
      dy += std::clamp(uy, -1.0, 1.0);
      if (std::hypot(ux, uy) < 1e-4) break;
    }
  }
  if (!confident) return {0.0, 0.0, false};
  dx = std::clamp(dx, -static_cast<double>(ref.width()), static_cast<double>(ref.width()));
  dy = std::clamp(dy, -static_cast<double>(ref.height()), static_cast<double>(ref.height()));
  return {dx, dy, true};
}

// ---------------------------------------------------------------------------
// Dense motion

/// Per-pixel displacement d with tgt(p + d) ~ ref(p), plus a validity flag.
struct MotionField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;
  std::vector<std::uint8_t> valid;

  MotionField() = default;
  MotionField(int w, int h)
      : width(w), height(h), dx(static_cast<std::size_t>(w) * h, 0.0f), dy(dx.size(), 0.0f), valid(dx.size(), 1) {}

  std::size_t size() const noexcept { return dx.size(); }
  float magnitude(std::size_t i) const noexcept { return std::hypot(dx[i], dy[i]); }
};

struct MotionConfig {
  int levels = -1;  // < 0: min(4, floor(log2(min(W,H)/32)))
  int block = 16;
  int radius = 4;

  int depth_for(int w, int h) const {
    if (levels >= 0) return levels;
    const int side = std::min(w, h);
    int d = 0;
    while (d < 4 && (side >> (d + 1)) >= 32) ++d;
    return d;
  }
};

namespace detail {

struct BlockGrid {
  int nx = 0, ny = 0, block = 0, w = 0, h = 0;
  std::vector<float> dx, dy;
  std::vector<std::uint8_t> valid;

  BlockGrid(int width, int height, int b)
      : nx((width + b - 1) / b), ny((height + b - 1) / b), block(b), w(width), h(height),
        dx(static_cast<std::size_t>(nx) * ny), dy(dx.size()), valid(dx.size(), 1) {}

  double center_x(int bx) const { return bx * block + (std::min(block, w - bx * block) - 1) / 2.0; }
  double center_y(int by) const { return by * block + (std::min(block, h - by * block) - 1) / 2.0; }

  // Bilinear interpolation between block centres. With `valid_only`, invalid
  // blocks are skipped and the weights renormalised; returns false if none
  // contributed.
  bool interpolate(double x, double y, bool valid_only, float& ox, float& oy) const {
    auto locate = [](double p, int n, auto center, int& i0, int& i1, double& f) {
      i0 = 0;
      while (i0 + 1 < n && center(i0 + 1) <= p) ++i0;
      i1 = std::min(i0 + 1, n - 1);
      const double c0 = center(i0), c1 = center(i1);
      f = i1 == i0 ? 0.0 : std::clamp((p - c0) / (c1 - c0), 0.0, 1.0);
    };
    int x0, x1, y0, y1;
    double fx, fy;
    locate(x, nx, [&](int i) { return center_x(i); }, x0, x1, fx);
    locate(y, ny, [&](int i) { return center_y(i); }, y0, y1, fy);
    const int idx[4] = {y0 * nx + x0, y0 * nx + x1, y1 * nx + x0, y1 * nx + x1};
    const double wt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    double sx = 0, sy = 0, sw = 0;
    for (int k = 0; k < 4; ++k) {
      if (valid_only && !valid[idx[k]]) continue;
      sx += wt[k] * dx[idx[k]];
      sy += wt[k] * dy[idx[k]];
      sw += wt[k];
    }
    if (sw <= 0.0) return false;
    ox = static_cast<float>(sx / sw);
    oy = static_cast<float>(sy / sw);
    return true;
  }
};

inline void match_blocks(const Tensor& ref, const Tensor& tgt, BlockGrid& grid, int radius) {
  const int w = ref.width(), h = ref.height();
  const float* tp = tgt.data().data();
  std::vector<std::array<int, 2>> offsets;
  for (int oy = -radius; oy <= radius; ++oy) {
    for (int ox = -radius; ox <= radius; ++ox) offsets.push_back({ox, oy});
  }
  std::stable_sort(offsets.begin(), offsets.end(), [](auto a, auto b) {
    return a[0] * a[0] + a[1] * a[1] < b[0] * b[0] + b[1] * b[1];
  });
  // Rows (or columns) of [lo, hi] whose displaced position stays in [0, n-1].
  auto overlap = [](int lo, int hi, double d, int n, int& a, int& b) {
    a = std::max(lo, static_cast<int>(std::ceil(-d - 1e-9)));
    b = std::min(hi, static_cast<int>(std::floor(n - 1 - d + 1e-9)));
    return b - a + 1;
  };
  for (int by = 0; by < grid.ny; ++by) {
    for (int bx = 0; bx < grid.nx; ++bx) {
      const std::size_t i = static_cast<std::size_t>(by) * grid.nx + bx;
      const int x0 = bx * grid.block, y0 = by * grid.block;
      const int x1 = std::min(x0 + grid.block, w) - 1, y1 = std::min(y0 + grid.block, h) - 1;
      const int area = (x1 - x0 + 1) * (y1 - y0 + 1);
      const double px = std::round(grid.dx[i]), py = std::round(grid.dy[i]);
      // Candidates are scored by mean squared difference over the part of
      // the block that lands inside the target; at least half must land.
      double best = std::numeric_limits<double>::infinity();
      double bdx = px, bdy = py;
      bool found = false;
      for (auto [ox, oy] : offsets) {
        const double ddx = px + ox, ddy = py + oy;
        int ax, bx1, ay, by1;
        const int cw = overlap(x0, x1, ddx, w, ax, bx1), ch = overlap(y0, y1, ddy, h, ay, by1);
        if (cw <= 0 || ch <= 0 || 2 * cw * ch < area) continue;
        const double budget = best * cw * ch;
        const int ix = static_cast<int>(ddx), iy = static_cast<int>(ddy);
        double ssd = 0.0;
        for (int y = ay; y <= by1 && ssd < budget; ++y) {
          for (int x = ax; x <= bx1; ++x) {
            const double d = tp[(y + iy) * w + x + ix] - ref.at(0, y, x);
            ssd += d * d;
          }
        }
        const double mean = ssd / (cw * ch);
        if (mean < best) {
          best = mean;
          bdx = ddx;
          bdy = ddy;
          found = true;
        }
      }
      grid.dx[i] = static_cast<float>(bdx);
      grid.dy[i] = static_cast<float>(bdy);
      grid.valid[i] = found ? 1 : 0;
    }
  }
}

}  // namespace detail

/// Coarse-to-fine block matching over the Haar LL pyramid of luma, seeded
/// with an optional global displacement. The dense field interpolates
/// bilinearly between block centres; pixels whose displacement leaves the
/// image, or whose block found no candidate, are flagged invalid.
inline MotionField estimate_motion(const Frame& ref, const Frame& tgt, const MotionConfig& cfg = {},
                                   GlobalShift init = {}) {
  if (ref.width() != tgt.width() || ref.height() != tgt.height()) {
    throw InvalidArgument("estimate_motion: frame dimensions differ");
  }
  const int depth = cfg.depth_for(ref.width(), ref.height());
  const auto rp = detail::intensity_pyramid(luma(ref), depth);
  const auto tp = detail::intensity_pyramid(luma(tgt), depth);

  std::vector<detail::BlockGrid> grids;
  for (int l = depth; l >= 0; --l) {
    detail::BlockGrid grid(rp[l].width(), rp[l].height(), cfg.block);
    if (l == depth) {
      const double scale = std::ldexp(1.0, -depth);
      std::fill(grid.dx.begin(), grid.dx.end(), static_cast<float>(init.dx * scale));
      std::fill(grid.dy.begin(), grid.dy.end(), static_cast<float>(init.dy * scale));
    } else {
      const auto& coarse = grids.back();
      for (int by = 0; by < grid.ny; ++by) {
        for (int bx = 0; bx < grid.nx; ++bx) {
          float cx = 0, cy = 0;
          const double qx = (grid.center_x(bx) - 0.5) / 2.0, qy = (grid.center_y(by) - 0.5) / 2.0;
          if (!coarse.interpolate(qx, qy, true, cx, cy)) coarse.interpolate(qx, qy, false, cx, cy);
          grid.dx[by * grid.nx + bx] = 2.0f * cx;
          grid.dy[by * grid.nx + bx] = 2.0f * cy;
        }
      }
    }
    detail::match_blocks(rp[l], tp[l], grid, cfg.radius);
    grids.push_back(std::move(grid));
  }

  const auto& fine = grids.back();
  MotionField field(ref.width(), ref.height());
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * field.width + x;
      const bool block_ok = fine.valid[(y / fine.block) * fine.nx + x / fine.block] != 0;
      float fx = 0, fy = 0;
      if (!fine.interpolate(x, y, true, fx, fy)) fine.interpolate(x, y, false, fx, fy);
      field.dx[i] = fx;
      field.dy[i] = fy;
      field.valid[i] = block_ok && detail::inside(x + fx, y + fy, field.width, field.height) ? 1 : 0;
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// Warping

struct WarpResult {
  Frame frame;
  std::vector<std::uint8_t> valid;
};

/// output(p) = bilinear frame(p + field(p)); out-of-bounds samples and invalid
/// field entries are masked (and hold the unwarped sample).
inline WarpResult warp(const Frame& frame, const MotionField& field) {
  if (frame.width() != field.width || frame.height() != field.height) {
    throw InvalidArgument("warp: field and frame dimensions differ");
  }
  const int w = frame.width(), h = frame.height();
  Tensor out(3, h, w);
  std::vector<std::uint8_t> valid(field.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double qx = x + static_cast<double>(field.dx[i]);
      const double qy = y + static_cast<double>(field.dy[i]);
      const bool ok = field.valid[i] && std::isfinite(qx) && std::isfinite(qy) && detail::inside(qx, qy, w, h);
      valid[i] = ok ? 1 : 0;
      for (int c = 0; c < 3; ++c) {
        out.at(c, y, x) = ok ? detail::sample(frame.plane(c).data(), w, h, qx, qy) : frame.at(c, y, x);
      }
    }
  }
  return {Frame::clamped(std::move(out)), std::move(valid)};
}

// ---------------------------------------------------------------------------
// Adaptive temporal averaging

struct SmoothingConfig {
  int max_half_window = 6;       // N_max
  double motion_cutoff = 256.0;  // pixels

  void validate() const {
    if (max_half_window < 0) throw InvalidArgument("N_max must be >= 0");
    if (!(motion_cutoff > 0.0)) throw InvalidArgument("motion cutoff must be > 0");
  }
};

/// floor(N_max * max(0, 1 - m / M))
inline int adaptive_halfwindow(double motion, const SmoothingConfig& cfg) {
  const double frac = std::max(0.0, 1.0 - motion / cfg.motion_cutoff);
  return static_cast<int>(std::floor(cfg.max_half_window * frac));
}

/// A neighbour already warped onto the centre frame.
struct RegisteredNeighbor {
  int offset = 0;  // temporal distance from the centre, nonzero
  Frame warped;
  std::vector<std::uint8_t> valid;
  std::vector<float> motion;  // per-pixel displacement magnitude
};

/// Per pixel: shrink the half window k until every neighbour with |offset| <= k
/// that is valid there moves less than the window allows, then average the
/// centre with those neighbours.
inline Frame fuse_window(const Frame& center, std::span<const RegisteredNeighbor> neighbors,
                         const SmoothingConfig& cfg) {
  cfg.validate();
  const int w = center.width(), h = center.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (const auto& nb : neighbors) {
    if (nb.warped.width() != w || nb.warped.height() != h || nb.valid.size() != n || nb.motion.size() != n) {
      throw InvalidArgument("fuse_window: neighbour dimensions differ from centre");
    }
  }
  Tensor out = center.tensor();
  for (std::size_t i = 0; i < n; ++i) {
    int k = cfg.max_half_window;
    for (;;) {
      double m = 0.0;
      for (const auto& nb : neighbors) {
        if (std::abs(nb.offset) <= k && nb.valid[i]) m = std::max(m, static_cast<double>(nb.motion[i]));
      }
      const int next = adaptive_halfwindow(m, cfg);
      if (next >= k) break;
      k = next;
    }
    int count = 1;
    for (const auto& nb : neighbors) count += (std::abs(nb.offset) <= k && nb.valid[i]) ? 1 : 0;
    if (count == 1) continue;
    for (int c = 0; c < 3; ++c) {
      double sum = center.plane(c)[i];
      for (const auto& nb : neighbors) {
        if (std::abs(nb.offset) <= k && nb.valid[i]) sum += nb.warped.plane(c)[i];
      }
      out.plane(c)[i] = static_cast<float>(sum / count);
    }
  }
  return Frame::clamped(std::move(out));
}

/// Registers `tgt` onto `center`: global prealignment, then dense refinement.
inline RegisteredNeighbor register_neighbor(const Frame& center, const Frame& tgt, int offset,
                                            const MotionConfig& motion = {}) {
  if (center.width() != tgt.width() || center.height() != tgt.height()) {
    throw InvalidArgument("smoothing window: frame dimensions differ");
  }
  const int levels = motion.depth_for(center.width(), center.height()) + 1;
  const GlobalShift shift = prealign(center, tgt, levels);
  const MotionField field = estimate_motion(center, tgt, motion, shift);
  WarpResult warped = warp(tgt, field);
  std::vector<float> mag(field.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = field.magnitude(i);
  return {offset, std::move(warped.frame), std::move(warped.valid), std::move(mag)};
}

/// Smooths window[center] using the other frames of the window, which are
/// assumed consecutive in time. The window may be truncated at sequence ends.
inline Frame smooth_sequence(std::span<const Frame> window, std::size_t center, const SmoothingConfig& cfg,
                             int jobs = 1, const MotionConfig& motion = {}) {
  cfg.validate();
  if (center >= window.size()) throw InvalidArgument("smooth_sequence: centre index outside window");
  const Frame& ref = window[center];
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].width() != ref.width() || window[i].height() != ref.height()) {
      throw InvalidArgument("smooth_sequence: frame " + std::to_string(i) + " of the window has different dimensions");
    }
  }
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const long d = static_cast<long>(i) - static_cast<long>(center);
    if (d != 0 && std::abs(d) <= cfg.max_half_window) picks.push_back(i);
  }
  std::vector<RegisteredNeighbor> neighbors(picks.size());
  parallel_for(picks.size(), jobs, [&](std::size_t j) {
    const int offset = static_cast<int>(static_cast<long>(picks[j]) - static_cast<long>(center));
    neighbors[j] = register_neighbor(ref, window[picks[j]], offset, motion);
  });
  return fuse_window(ref, neighbors, cfg);
}

}  // namespace llenhance
