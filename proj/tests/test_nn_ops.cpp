#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"

namespace llenhance {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

nn::Kernel random_kernel(int out, int in, int k, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 0.5f);
  nn::Kernel kern(out, in, k);
  for (float& v : kern.values) v = n(rng);
  for (float& v : kern.bias) v = n(rng);
  return kern;
}

TEST(Conv2d, AllOnesKernelOnConstantInput) {
  nn::Kernel k(1, 1, 3);
  std::fill(k.values.begin(), k.values.end(), 1.0f);
  const Tensor out = nn::conv2d(Tensor(1, 4, 4, 1.0f), k, 1, 1);
  ASSERT_EQ(out.height(), 4);
  ASSERT_EQ(out.width(), 4);
  for (float v : out.data()) EXPECT_EQ(v, 9.0f);
}

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(2, 7, 5, rng, -1, 1);
  nn::Kernel k(2, 2, 3);
  k.at(0, 0, 1, 1) = 1.0f;
  k.at(1, 1, 1, 1) = 1.0f;
  EXPECT_EQ(nn::conv2d(x, k, 1, 1), x);
}

TEST(Conv2d, StrideTwoMatchesNaiveOracle) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(2, 8, 8, rng, -1, 1);
  const nn::Kernel k = random_kernel(4, 2, 3, rng);
  const Tensor got = nn::conv2d(x, k, 2, 1);
  ASSERT_EQ(got.height(), 4);
  EXPECT_LE(max_abs_diff(got, oracle::conv2d(x, k, 2, 1)), 1e-5);
}

TEST(Conv2d, RandomCasesMatchNaiveOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ch(1, 6), side(1, 19), ks(1, 4), st(1, 2), pd(0, 2);
  int run = 0;
  while (run < 100) {
    const int k = ks(rng), pad = pd(rng), stride = st(rng);
    const int h = side(rng), w = side(rng);
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    const Tensor x = random_tensor(ch(rng), h, w, rng, -1, 1);
    const nn::Kernel kern = random_kernel(ch(rng), x.channels(), k, rng);
    ASSERT_LE(max_abs_diff(nn::conv2d(x, kern, stride, pad), oracle::conv2d(x, kern, stride, pad)), 1e-5)
        << "case " << run;
    ++run;
  }
}

TEST(Conv2d, LinearWithoutBias) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(3, 9, 9, rng, -1, 1), y = random_tensor(3, 9, 9, rng, -1, 1);
  nn::Kernel k = random_kernel(2, 3, 3, rng);
  std::fill(k.bias.begin(), k.bias.end(), 0.0f);
  Tensor sum = x;
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = 2 * x.data()[i] - 3 * y.data()[i];
  const Tensor a = nn::conv2d(x, k, 1, 1), b = nn::conv2d(y, k, 1, 1), s = nn::conv2d(sum, k, 1, 1);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s.data()[i], 2 * a.data()[i] - 3 * b.data()[i], 1e-4);
}

TEST(Conv2d, ShapeErrors) {
  nn::Kernel k(1, 2, 3);
  EXPECT_THROW(nn::conv2d(Tensor(3, 4, 4), k, 1, 1), InvalidArgument);
  nn::Kernel k1(1, 1, 5);
  EXPECT_THROW(nn::conv2d(Tensor(1, 2, 2), k1, 1, 1), InvalidArgument);
  EXPECT_THROW(nn::conv2d(Tensor(1, 4, 4), nn::Kernel(1, 1, 3), 3, 1), InvalidArgument);
}

TEST(InstanceNorm, ConstantChannelBecomesBeta) {
  const std::vector<float> g{1.0f}, b{0.0f};
  const Tensor zero = nn::instance_norm(Tensor(1, 3, 3, 4.2f), g, b);
  for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
  const std::vector<float> b2{0.25f};
  const Tensor shifted = nn::instance_norm(Tensor(1, 3, 3, 4.2f), g, b2);
  for (float v : shifted.data()) EXPECT_EQ(v, 0.25f);
}

TEST(InstanceNorm, TwoSampleChannel) {
  const std::vector<float> g{1.0f}, b{0.0f};
  const Tensor out = nn::instance_norm(Tensor(1, 1, 2, std::vector<float>{-1, 1}), g, b);
  EXPECT_NEAR(out.at(0, 0, 0), -1.0 / std::sqrt(1.0 + 1e-5), 1e-7);
  EXPECT_NEAR(out.at(0, 0, 1), 1.0 / std::sqrt(1.0 + 1e-5), 1e-7);
}

TEST(InstanceNorm, NormalisesStatisticsAndIgnoresShift) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor(3, 16, 16, rng, -2, 3);
  const std::vector<float> g(3, 1.0f), b(3, 0.0f);
  const Tensor y = nn::instance_norm(x, g, b);
  for (int c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (float s : y.plane(c)) m += s;
    m /= 256;
    for (float s : y.plane(c)) v += (s - m) * (s - m);
    v /= 256;
    EXPECT_LT(std::abs(m), 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
  Tensor shifted = x;
  for (float& s : shifted.data()) s += 1.75f;
  EXPECT_LE(max_abs_diff(nn::instance_norm(shifted, g, b), y), 1e-5);
  EXPECT_THROW(nn::instance_norm(x, std::vector<float>(2, 1.0f), b), InvalidArgument);
}

TEST(Softshrink, Examples) {
  const std::vector<float> l{0.3f};
  EXPECT_FLOAT_EQ(nn::softshrink(Tensor(1, 1, 1, 1.0f), l).at(0, 0, 0), 0.7f);
  EXPECT_EQ(nn::softshrink(Tensor(1, 1, 1, -0.2f), l).at(0, 0, 0), 0.0f);
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(2, 5, 5, rng, -2, 2);
  EXPECT_EQ(nn::softshrink(x, std::vector<float>{0, 0}), x);
}

TEST(Softshrink, NeverGrowsOrFlipsSign) {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(4, 9, 9, rng, -3, 3);
  const std::vector<float> l{0.0f, 0.1f, 0.5f, 2.0f};
  const Tensor y = nn::softshrink(x, l);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LE(std::abs(y.data()[i]), std::abs(x.data()[i]));
    EXPECT_GE(y.data()[i] * x.data()[i], 0.0f);
  }
}

TEST(Relu, ExamplesAndIdempotence) {
  EXPECT_EQ(nn::relu(Tensor(1, 1, 1, -1.0f)).at(0, 0, 0), 0.0f);
  EXPECT_EQ(nn::relu(Tensor(1, 1, 1, 2.0f)).at(0, 0, 0), 2.0f);
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(2, 4, 4, rng, -1, 1);
  EXPECT_EQ(nn::relu(nn::relu(x)), nn::relu(x));
}

TEST(Upsample, ReplicatesAndBoxDownInverts) {
  const Tensor one = nn::upsample_nearest2x(Tensor(1, 1, 1, 5.0f));
  ASSERT_EQ(one.height(), 2);
  for (float v : one.data()) EXPECT_EQ(v, 5.0f);
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor(3, 8, 8, rng);
  const Tensor up = nn::upsample_nearest2x(x);
  EXPECT_EQ(up.height(), 16);
  EXPECT_EQ(up.width(), 16);
  EXPECT_EQ(resize_area(up, 8, 8), x);
}

Generator::ResidualWeights random_residual(int c, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 0.3f);
  Generator::ResidualWeights r{random_kernel(c, c, 3, rng), {std::vector<float>(c), std::vector<float>(c)},
                               random_kernel(c, c, 3, rng), {std::vector<float>(c), std::vector<float>(c)}};
  for (auto* p : {&r.norm1.gamma, &r.norm1.beta, &r.norm2.gamma, &r.norm2.beta})
    for (float& v : *p) v = n(rng);
  return r;
}

TEST(ResidualBlock, ZeroWeightsAreIdentity) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(4, 8, 8, rng, -1, 1);
  Generator::ResidualWeights r{nn::Kernel(4, 4, 3), {std::vector<float>(4, 1), std::vector<float>(4, 0)},
                               nn::Kernel(4, 4, 3), {std::vector<float>(4, 1), std::vector<float>(4, 0)}};
  EXPECT_EQ(Generator::residual_block(x, r), x);
}

TEST(ResidualBlock, OutputMinusInputIsBranch) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor(4, 8, 8, rng, -1, 1);
  const auto r = random_residual(4, rng);
  const Tensor out = Generator::residual_block(x, r);
  const Tensor branch = Generator::residual_branch(x, r);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out.data()[i], branch.data()[i] + x.data()[i]);
}

TEST(ResidualBlock, MatchesComposedOracle) {
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor(4, 8, 8, rng, -1, 1);
  const auto r = random_residual(4, rng);
  Tensor y = oracle::map(oracle::instance_norm(oracle::conv2d(x, r.conv1, 1, 1), r.norm1.gamma, r.norm1.beta),
                         [](float v) { return v > 0 ? v : 0.0f; });
  y = oracle::instance_norm(oracle::conv2d(y, r.conv2, 1, 1), r.norm2.gamma, r.norm2.beta);
  EXPECT_LE(max_abs_diff(Generator::residual_block(x, r), oracle::add(x, y)), 1e-5);
}

}  // namespace
}  // namespace llenhance
