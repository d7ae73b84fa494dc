#pragma once

// Forward-only CNN primitives on planar float tensors.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "llenhance/error.hpp"
#include "llenhance/image.hpp"

namespace llenhance::nn {

/// Convolution kernel laid out (out_channels, in_channels, size, size).
struct Kernel {
  int out_channels = 0;
  int in_channels = 0;
  int size = 0;
  std::vector<float> values;
  std::vector<float> bias;  // out_channels entries

  Kernel() = default;
  Kernel(int out, int in, int k)
      : out_channels(out), in_channels(in), size(k),
        values(static_cast<std::size_t>(out) * in * k * k, 0.0f), bias(out, 0.0f) {}

  float& at(int o, int i, int ky, int kx) noexcept {
    return values[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }
  float at(int o, int i, int ky, int kx) const noexcept {
    return values[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }
};

inline int conv_output_size(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

/// Cross-correlation with reflection padding. Computed as a row-chunked
/// im2col followed by a single-precision GEMM.
inline Tensor conv2d(const Tensor& x, const Kernel& k, int stride, int pad) {
  if (k.in_channels != x.channels()) throw InvalidArgument("conv2d: input channels do not match kernel");
  if (k.values.size() != static_cast<std::size_t>(k.out_channels) * k.in_channels * k.size * k.size ||
      k.bias.size() != static_cast<std::size_t>(k.out_channels)) {
    throw InvalidArgument("conv2d: malformed kernel");
  }
  if (stride != 1 && stride != 2) throw InvalidArgument("conv2d: stride must be 1 or 2");
  if (pad < 0 || x.height() + 2 * pad < k.size || x.width() + 2 * pad < k.size) {
    throw InvalidArgument("conv2d: padded input smaller than kernel");
  }
  const int ho = conv_output_size(x.height(), k.size, stride, pad);
  const int wo = conv_output_size(x.width(), k.size, stride, pad);
  const int taps = k.in_channels * k.size * k.size;
  Tensor out(k.out_channels, ho, wo);

  // Padded column lookup is shared by every row and channel.
  std::vector<int> col_src(static_cast<std::size_t>(wo) * k.size);
  for (int ox = 0; ox < wo; ++ox) {
    for (int kx = 0; kx < k.size; ++kx) col_src[ox * k.size + kx] = reflect_index(ox * stride - pad + kx, x.width());
  }

  using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> weights(k.values.data(), k.out_channels, taps);
  const Eigen::Map<const Eigen::VectorXf> bias(k.bias.data(), k.out_channels);

  constexpr std::size_t kChunkFloats = std::size_t{1} << 21;
  const int rows_per_chunk = static_cast<int>(std::max<std::size_t>(1, kChunkFloats / (static_cast<std::size_t>(taps) * wo)));
  RowMajor cols;
  RowMajor result;
  for (int y0 = 0; y0 < ho; y0 += rows_per_chunk) {
    const int rows = std::min(rows_per_chunk, ho - y0);
    const int n = rows * wo;
    cols.resize(taps, n);
    for (int ci = 0; ci < k.in_channels; ++ci) {
      for (int ky = 0; ky < k.size; ++ky) {
        for (int r = 0; r < rows; ++r) {
          const int sy = reflect_index((y0 + r) * stride - pad + ky, x.height());
          const float* src = &x.data()[(static_cast<std::size_t>(ci) * x.height() + sy) * x.width()];
          for (int kx = 0; kx < k.size; ++kx) {
            float* dst = &cols(static_cast<Eigen::Index>((ci * k.size + ky) * k.size + kx), r * wo);
            for (int ox = 0; ox < wo; ++ox) dst[ox] = src[col_src[ox * k.size + kx]];
          }
        }
      }
    }
    result.noalias() = weights * cols;
    result.colwise() += bias;
    for (int o = 0; o < k.out_channels; ++o) {
      std::copy_n(&result(o, 0), n, &out.at(o, y0, 0));
    }
  }
  return out;
}

/// Per-channel normalisation with population variance, then affine rescale.
inline Tensor instance_norm(Tensor x, std::span<const float> gamma, std::span<const float> beta, double eps = 1e-5) {
  if (gamma.size() != static_cast<std::size_t>(x.channels()) || beta.size() != gamma.size()) {
    throw InvalidArgument("instance_norm: affine parameters do not match channel count");
  }
  for (int c = 0; c < x.channels(); ++c) {
    auto p = x.plane(c);
    if (p.empty()) continue;
    double mean = 0.0;
    for (float v : p) mean += v;
    mean /= static_cast<double>(p.size());
    double var = 0.0;
    for (float v : p) var += (v - mean) * (v - mean);
    var /= static_cast<double>(p.size());
    const double scale = gamma[c] / std::sqrt(var + eps);
    for (float& v : p) v = static_cast<float>((v - mean) * scale + beta[c]);
  }
  return x;
}

/// sign(v) * max(|v| - lambda_c, 0), per channel.
inline Tensor softshrink(Tensor x, std::span<const float> lambda) {
  if (lambda.size() != static_cast<std::size_t>(x.channels())) {
    throw InvalidArgument("softshrink: threshold count does not match channel count");
  }
  for (int c = 0; c < x.channels(); ++c) {
    const float l = lambda[c];
    for (float& v : x.plane(c)) v = v > l ? v - l : (v < -l ? v + l : 0.0f);
  }
  return x;
}

inline Tensor relu(Tensor x) {
  for (float& v : x.data()) v = std::max(v, 0.0f);
  return x;
}

inline Tensor tanh(Tensor x) {
  for (float& v : x.data()) v = std::tanh(v);
  return x;
}

inline Tensor upsample_nearest2x(const Tensor& x) {
  Tensor out(x.channels(), 2 * x.height(), 2 * x.width());
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int ox = 0; ox < out.width(); ++ox) out.at(c, y, ox) = x.at(c, y / 2, ox / 2);
    }
  }
  return out;
}

}  // namespace llenhance::nn
