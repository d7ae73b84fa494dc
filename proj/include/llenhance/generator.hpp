#pragma once

// Generator forward pass and whole-frame tiled enhancement.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "llenhance/image.hpp"
#include "llenhance/nn_ops.hpp"
#include "llenhance/parallel.hpp"
#include "llenhance/patchwork.hpp"
#include "llenhance/weights.hpp"

namespace llenhance {

struct NormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
};

/// Inference-ready generator: encoder of stride-2 conv/IN/softshrink blocks,
/// residual blocks, nearest-upsample decoder, and a tanh-bounded 3x3 head.
class Generator {
 public:
  explicit Generator(const GeneratorWeights& w) : arch_(w.arch()) {
    auto kernel = [&](const std::string& prefix, int cout, int cin) {
      nn::Kernel k(cout, cin, 3);
      k.values = w[prefix + ".weight"];
      k.bias = w[prefix + ".bias"];
      return k;
    };
    auto norm = [&](const std::string& prefix) { return NormParams{w[prefix + ".gamma"], w[prefix + ".beta"]}; };
    for (int i = 0; i < arch_.n_encoder_blocks; ++i) {
      const std::string p = "enc." + std::to_string(i);
      encoder_.push_back({kernel(p + ".conv", arch_.encoder_out(i), arch_.encoder_in(i)), norm(p + ".norm"),
                          w[p + ".shrink.lambda"]});
    }
    const int b = arch_.bottleneck();
    for (int i = 0; i < arch_.n_resnet_blocks; ++i) {
      const std::string p = "res." + std::to_string(i);
      residual_.push_back({kernel(p + ".conv1", b, b), norm(p + ".norm1"), kernel(p + ".conv2", b, b),
                           norm(p + ".norm2")});
    }
    for (int i = 0; i < arch_.n_decoder_blocks; ++i) {
      const std::string p = "dec." + std::to_string(i);
      decoder_.push_back({kernel(p + ".conv", arch_.decoder_out(i), arch_.decoder_in(i)), norm(p + ".norm")});
    }
    head_ = kernel("head.conv", arch_.out_channels, arch_.decoder_out(arch_.n_decoder_blocks - 1));
  }

  const GeneratorArch& arch() const noexcept { return arch_; }

  /// Input in the model domain, shape (in_channels, N, N) with N divisible
  /// by 2^n_encoder_blocks. Output has out_channels and the same side.
  Tensor forward(Tensor x) const {
    if (x.channels() != arch_.in_channels) throw InvalidArgument("generator: wrong input channel count");
    const int m = arch_.size_multiple();
    if (x.height() % m != 0 || x.width() % m != 0 || x.height() == 0 || x.width() == 0) {
      throw InvalidArgument("generator: spatial size must be a positive multiple of " + std::to_string(m));
    }
    for (const auto& e : encoder_) {
      x = nn::softshrink(nn::instance_norm(nn::conv2d(x, e.conv, 2, 1), e.norm.gamma, e.norm.beta), e.lambda);
    }
    for (const auto& r : residual_) x = residual_block(x, r);
    for (const auto& d : decoder_) {
      x = nn::relu(nn::instance_norm(nn::conv2d(nn::upsample_nearest2x(x), d.conv, 1, 1), d.norm.gamma, d.norm.beta));
    }
    return nn::tanh(nn::conv2d(x, head_, 1, 1));
  }

  struct ResidualWeights {
    nn::Kernel conv1;
    NormParams norm1;
    nn::Kernel conv2;
    NormParams norm2;
  };

  /// x + IN(conv(ReLU(IN(conv(x)))))
  static Tensor residual_branch(const Tensor& x, const ResidualWeights& r) {
    Tensor y = nn::relu(nn::instance_norm(nn::conv2d(x, r.conv1, 1, 1), r.norm1.gamma, r.norm1.beta));
    return nn::instance_norm(nn::conv2d(y, r.conv2, 1, 1), r.norm2.gamma, r.norm2.beta);
  }

  static Tensor residual_block(const Tensor& x, const ResidualWeights& r) {
    Tensor y = residual_branch(x, r);
    auto out = y.data();
    auto in = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
    return y;
  }

 private:
  struct EncoderBlock {
    nn::Kernel conv;
    NormParams norm;
    std::vector<float> lambda;
  };
  struct DecoderBlock {
    nn::Kernel conv;
    NormParams norm;
  };

  GeneratorArch arch_;
  std::vector<EncoderBlock> encoder_;
  std::vector<ResidualWeights> residual_;
  std::vector<DecoderBlock> decoder_;
  nn::Kernel head_;
};

/// Convs ~ N(0, std^2) with zero bias, gamma = 1, beta = 0, shrink thresholds 0.05.
inline GeneratorWeights random_weights(const GeneratorArch& arch, std::uint64_t seed, float stddev = 0.02f) {
  GeneratorWeights w(arch);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, stddev);
  for (const auto& spec : expected_tensors(arch)) {
    auto& values = w[spec.name];
    if (spec.name.ends_with(".weight")) {
      for (float& v : values) v = normal(rng);
    } else if (spec.name.ends_with(".gamma")) {
      std::fill(values.begin(), values.end(), 1.0f);
    } else if (spec.name.ends_with(".lambda")) {
      std::fill(values.begin(), values.end(), 0.05f);
    }
  }
  return w;
}

struct EnhanceStats {
  std::size_t tiles = 0;
};

/// Runs the generator over every tile of the layout and merges the local RGB
/// outputs with Gaussian weights. Tiles run on up to `jobs` threads but are
/// merged in layout order, so the result does not depend on `jobs`.
inline Frame enhance_frame(const Frame& frame, const Generator& gen, const PatchConfig& cfg, int jobs = 1,
                           EnhanceStats* stats = nullptr) {
  if (cfg.local_size % gen.arch().size_multiple() != 0) {
    throw InvalidArgument("local patch size must be divisible by " + std::to_string(gen.arch().size_multiple()));
  }
  if (gen.arch().in_channels != 6 || gen.arch().out_channels < 3) {
    throw InvalidArgument("generator must take 6 channels and produce at least 3");
  }
  const TileLayout layout = compute_layout(frame.width(), frame.height(), cfg);
  TileMerger merger(frame.width(), frame.height(), gaussian_weights(cfg.local_size));

  // Bounded batches keep at most `batch` enhanced tiles resident.
  const std::size_t batch = static_cast<std::size_t>(std::max(jobs, 1)) * 2;
  std::vector<Tensor> done;
  for (std::size_t start = 0; start < layout.origins.size(); start += batch) {
    const std::size_t n = std::min(batch, layout.origins.size() - start);
    done.assign(n, Tensor{});
    parallel_for(n, jobs, [&](std::size_t i) {
      const Point origin = layout.origins[start + i];
      Tensor out = gen.forward(to_model_domain(extract_pair(frame, origin, cfg).tensor));
      done[i] = from_model_domain(crop(out, 0, 0, out.width(), out.height(), 0, 3));
    });
    for (std::size_t i = 0; i < n; ++i) merger.add(layout.origins[start + i], done[i]);
  }
  if (stats) stats->tiles = layout.origins.size();
  return merger.finish();
}

}  // namespace llenhance
