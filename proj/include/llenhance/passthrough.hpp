#pragma once

// Hand-built generator weights that approximately reproduce the local RGB
// input. Used to exercise the tiled enhancement plumbing end to end.
//
// The construction:
//  * encoder convs average 2x2 blocks of the three local channels;
//  * instance norms run with inputs scaled so far below sqrt(eps) that the
//    normaliser becomes a fixed gain, which gamma then cancels (only the
//    channel mean is removed, so inputs should be mid-grey on average);
//  * residual branches are zero;
//  * each decoder block's 3x3 [1,2,1]x[1,2,1]/16 kernel after nearest
//    upsampling performs linear interpolation, with signed values carried
//    through ReLU as positive/negative channel pairs;
//  * the last decoder block emits ReLU hinges that the head combines into a
//    piecewise-linear atanh, so the tanh output tracks the input.

#include <cmath>
#include <string>
#include <vector>

#include "llenhance/weights.hpp"

namespace llenhance {

inline GeneratorWeights passthrough_weights(const GeneratorArch& arch, double eps = 1e-5) {
  arch.validate();
  if (arch.in_channels < 3 || arch.out_channels < 3) throw InvalidArgument("passthrough: need >= 3 channels");
  const int hinges = arch.base_filters / 3;
  if (hinges < 4) throw InvalidArgument("passthrough: base_filters must be >= 12");

  constexpr float kScale = 1e-5f;
  const float gain = static_cast<float>(std::sqrt(eps) / kScale);
  GeneratorWeights w(arch);

  auto at = [](std::vector<float>& k, int cin, int o, int i, int ky, int kx) -> float& {
    return k[((static_cast<std::size_t>(o) * cin + i) * 3 + ky) * 3 + kx];
  };
  auto unit_norm = [&](const std::string& p) {
    std::fill(w[p + ".gamma"].begin(), w[p + ".gamma"].end(), 1.0f);
  };

  for (int b = 0; b < arch.n_encoder_blocks; ++b) {
    const std::string p = "enc." + std::to_string(b);
    auto& k = w[p + ".conv.weight"];
    const int cin = arch.encoder_in(b);
    unit_norm(p + ".norm");
    for (int c = 0; c < 3; ++c) {
      for (int ky = 1; ky <= 2; ++ky) {
        for (int kx = 1; kx <= 2; ++kx) at(k, cin, c, c, ky, kx) = kScale / 4.0f;
      }
      w[p + ".norm.gamma"][c] = gain;
    }
  }
  for (int r = 0; r < arch.n_resnet_blocks; ++r) {
    unit_norm("res." + std::to_string(r) + ".norm1");
    unit_norm("res." + std::to_string(r) + ".norm2");
  }

  // Blurred copy of signed colour c into output o, reading either channel c
  // directly (straight after the encoder) or the pair (c, c+3) as pos - neg.
  auto blur_into = [&](std::vector<float>& k, int cin, int o, int c, bool split_input, float sign) {
    static constexpr float tap[3] = {0.25f, 0.5f, 0.25f};
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const float v = sign * kScale * tap[ky] * tap[kx];
        at(k, cin, o, c, ky, kx) = v;
        if (split_input) at(k, cin, o, c + 3, ky, kx) = -v;
      }
    }
  };

  // Chebyshev-spaced knots for the atanh interpolant.
  constexpr double kRange = 0.96;
  std::vector<double> knots(hinges + 1);
  for (int j = 0; j <= hinges; ++j) knots[j] = -kRange * std::cos(M_PI * j / hinges);

  const int last = arch.n_decoder_blocks - 1;
  for (int b = 0; b <= last; ++b) {
    const std::string p = "dec." + std::to_string(b);
    auto& k = w[p + ".conv.weight"];
    const int cin = arch.decoder_in(b);
    const bool split = b > 0;
    unit_norm(p + ".norm");
    if (b < last) {
      for (int c = 0; c < 3; ++c) {
        blur_into(k, cin, c, c, split, 1.0f);
        blur_into(k, cin, c + 3, c, split, -1.0f);
        w[p + ".norm.gamma"][c] = gain;
        w[p + ".norm.gamma"][c + 3] = gain;
      }
    } else {
      for (int c = 0; c < 3; ++c) {
        for (int j = 0; j < hinges; ++j) {
          const int o = c * hinges + j;
          blur_into(k, cin, o, c, split, 1.0f);
          w[p + ".norm.gamma"][o] = gain;
          w[p + ".norm.beta"][o] = static_cast<float>(-knots[j]);
        }
      }
    }
  }

  // head: atanh(knot_0) + sum_j slope_change_j * ReLU(v - knot_j)
  auto& head = w["head.conv.weight"];
  const int head_in = arch.decoder_out(last);
  double previous_slope = 0.0;
  for (int j = 0; j < hinges; ++j) {
    const double slope = (std::atanh(knots[j + 1]) - std::atanh(knots[j])) / (knots[j + 1] - knots[j]);
    for (int c = 0; c < 3; ++c) at(head, head_in, c, c * hinges + j, 1, 1) = static_cast<float>(slope - previous_slope);
    previous_slope = slope;
  }
  for (int c = 0; c < 3; ++c) w["head.conv.bias"][c] = static_cast<float>(std::atanh(knots[0]));
  return w;
}

}  // namespace llenhance
