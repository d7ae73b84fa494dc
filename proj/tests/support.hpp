#pragma once

// Shared generators for synthetic test data.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "llenhance.hpp"

namespace llenhance::testing {

inline Tensor random_tensor(int c, int h, int w, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(c, h, w);
  for (float& v : t.data()) v = u(rng);
  return t;
}

inline Frame random_frame(int w, int h, std::mt19937_64& rng) { return Frame(random_tensor(3, h, w, rng)); }

/// Textured frame: blurred noise plus a few broad gradients, values in [0.2, 0.8].
inline Frame texture_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor noise = random_tensor(1, h, w, rng);
  // Separable box blur, radius 2, applied twice.
  auto blur = [&](Tensor src) {
    for (int pass = 0; pass < 2; ++pass) {
      Tensor tmp(1, h, w);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          float s = 0;
          for (int k = -2; k <= 2; ++k) s += src.at(0, y, reflect_index(x + k, w));
          tmp.at(0, y, x) = s / 5;
        }
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          float s = 0;
          for (int k = -2; k <= 2; ++k) s += tmp.at(0, reflect_index(y + k, h), x);
          src.at(0, y, x) = s / 5;
        }
      }
    }
    return src;
  };
  Tensor base = blur(noise);
  double lo = 1e9, hi = -1e9;
  for (float v : base.data()) lo = std::min<double>(lo, v), hi = std::max<double>(hi, v);
  std::uniform_real_distribution<double> phase(0, 2 * M_PI);
  const double p1 = phase(rng), p2 = phase(rng);
  Tensor out(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = (base.at(0, y, x) - lo) / (hi - lo);
      const double broad = 0.5 + 0.5 * std::sin(2 * M_PI * x / 97.0 + p1) * std::cos(2 * M_PI * y / 71.0 + p2);
      const double v = 0.2 + 0.6 * (0.7 * t + 0.3 * broad);
      out.at(0, y, x) = static_cast<float>(v);
      out.at(1, y, x) = static_cast<float>(0.2 + 0.6 * (0.6 * t + 0.4 * (1 - broad)));
      out.at(2, y, x) = static_cast<float>(0.8 - 0.6 * t);
    }
  }
  return Frame(std::move(out));
}

/// Content translated by (dx, dy): result(x + dx, y + dy) = src(x, y),
/// exposed borders reflection-filled.
inline Frame shifted(const Frame& src, int dx, int dy) {
  Tensor out(3, src.height(), src.width());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < src.width(); ++x) {
        out.at(c, y, x) = src.at(c, reflect_index(y - dy, src.height()), reflect_index(x - dx, src.width()));
      }
    }
  }
  return Frame(std::move(out));
}

/// Mid-grey frame plus random low-frequency cosines whose periods divide the
/// frame side, so each channel's mean is exactly 0.5. Values stay in [0.1, 0.9].
inline Frame lowfreq_frame(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> freq(0, 3);
  std::uniform_real_distribution<double> phase(0, 2 * M_PI), amp(0.5, 1.0);
  Tensor out(3, side, side);
  for (int c = 0; c < 3; ++c) {
    struct Wave { int u, v; double a, p; };
    Wave waves[4];
    double total = 0;
    for (auto& wv : waves) {
      do {
        wv.u = freq(rng);
        wv.v = freq(rng);
      } while (wv.u == 0 && wv.v == 0);
      wv.a = amp(rng);
      wv.p = phase(rng);
      total += wv.a;
    }
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double s = 0;
        for (const auto& wv : waves) s += wv.a * std::cos(2 * M_PI * (wv.u * (x + 0.5) + wv.v * (y + 0.5)) / side + wv.p);
        out.at(c, y, x) = static_cast<float>(0.5 + 0.4 * s / total);
      }
    }
  }
  return Frame(std::move(out));
}

inline double mean_abs_diff(const Frame& a, const Frame& b) {
  double s = 0;
  const auto da = a.tensor().data(), db = b.tensor().data();
  for (std::size_t i = 0; i < da.size(); ++i) s += std::abs(da[i] - db[i]);
  return s / static_cast<double>(da.size());
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, static_cast<double>(std::abs(a.data()[i] - b.data()[i])));
  return m;
}

/// LLGW bytes with the JSON header replaced by `edit(header)`; the blob is kept.
inline std::vector<char> rewrite_header(const std::vector<char>& bytes, const std::function<void(nlohmann::json&)>& edit) {
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 4);
  auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  edit(header);
  const std::string text = header.dump();
  const auto new_len = static_cast<std::uint32_t>(text.size());
  const std::size_t blob = bytes.size() - 12 - len;
  std::vector<char> out(12 + text.size() + blob);
  std::memcpy(out.data(), bytes.data(), 8);
  std::memcpy(out.data() + 8, &new_len, 4);
  std::memcpy(out.data() + 12, text.data(), text.size());
  if (blob > 0) std::memcpy(out.data() + 12 + text.size(), bytes.data() + 12 + len, blob);
  return out;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("llenhance-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace llenhance::testing
