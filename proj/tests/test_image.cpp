#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support.hpp"

namespace llenhance {
namespace {

using testing::random_tensor;

TEST(Frame, RejectsOutOfRangeAndNonFinite) {
  Tensor t(3, 2, 2, 0.5f);
  t.at(1, 0, 1) = 1.5f;
  EXPECT_THROW(Frame{t}, InvalidArgument);
  t.at(1, 0, 1) = std::nanf("");
  EXPECT_THROW(Frame{t}, InvalidArgument);
  EXPECT_THROW(Frame(Tensor(4, 2, 2)), InvalidArgument);
  EXPECT_THROW(Frame(0, 3), InvalidArgument);
}

TEST(Frame, ClampedKeepsRangeButRejectsNaN) {
  Tensor t(3, 1, 2, 0.5f);
  t.at(0, 0, 0) = -0.25f;
  t.at(2, 0, 1) = 1.25f;
  const Frame f = Frame::clamped(t);
  EXPECT_EQ(f.at(0, 0, 0), 0.0f);
  EXPECT_EQ(f.at(2, 0, 1), 1.0f);
  t.at(1, 0, 0) = std::nanf("");
  EXPECT_THROW(Frame::clamped(t), InvalidArgument);
}

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(2, 2, 2, std::vector<float>(7)), InvalidArgument);
  EXPECT_NO_THROW(Tensor(2, 2, 2, std::vector<float>(8)));
}

TEST(ResizeArea, ConstantStaysConstant) {
  const Tensor out = resize_area(Tensor(1, 4, 4, 0.5f), 2, 2);
  for (float v : out.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(ResizeArea, TwoByTwoToOne) {
  const Tensor src(1, 2, 2, std::vector<float>{0, 0, 1, 1});
  EXPECT_FLOAT_EQ(resize_area(src, 1, 1).at(0, 0, 0), 0.5f);
}

TEST(ResizeArea, NonIntegerRatioPreservesMean) {
  std::mt19937_64 rng(7);
  const Tensor src = random_tensor(1, 1000, 1000, rng);
  const Tensor out = resize_area(src, 360, 360);
  // Oracle: the plain mean of all source samples.
  const double in_mean = std::accumulate(src.data().begin(), src.data().end(), 0.0) / src.size();
  const double out_mean = std::accumulate(out.data().begin(), out.data().end(), 0.0) / out.size();
  EXPECT_NEAR(out_mean, in_mean, 1e-6);
  for (float v : out.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(ResizeArea, FractionalFootprintByHand) {
  // 3 -> 2: output 0 covers [0, 1.5): (x0 + 0.5 x1) / 1.5.
  const Tensor src(1, 1, 3, std::vector<float>{3, 6, 9});
  const Tensor out = resize_area(src, 1, 2);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 4.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 1), 8.0f);
}

TEST(ResizeArea, IsLinear) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> coef(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> side(2, 40);
    const int h = side(rng), w = side(rng);
    const int oh = std::uniform_int_distribution<int>(1, h)(rng), ow = std::uniform_int_distribution<int>(1, w)(rng);
    const Tensor x = random_tensor(2, h, w, rng), y = random_tensor(2, h, w, rng);
    const float a = coef(rng), b = coef(rng);
    Tensor combo(2, h, w);
    for (std::size_t i = 0; i < combo.size(); ++i) combo.data()[i] = a * x.data()[i] + b * y.data()[i];
    const Tensor lhs = resize_area(combo, oh, ow);
    const Tensor rx = resize_area(x, oh, ow), ry = resize_area(y, oh, ow);
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs.data()[i], a * rx.data()[i] + b * ry.data()[i], 1e-5);
  }
}

TEST(ResizeArea, Errors) {
  EXPECT_THROW(resize_area(Tensor(1, 4, 4), 0, 2), InvalidArgument);
  EXPECT_THROW(resize_area(Tensor(1, 4, 4), 8, 2), InvalidArgument);
}

TEST(ModelDomain, Endpoints) {
  EXPECT_EQ(to_model_domain(Tensor(1, 1, 1, 0.0f)).at(0, 0, 0), -1.0f);
  EXPECT_EQ(to_model_domain(Tensor(1, 1, 1, 1.0f)).at(0, 0, 0), 1.0f);
  EXPECT_EQ(from_model_domain(Tensor(1, 1, 1, 3.0f)).at(0, 0, 0), 1.0f);
  EXPECT_EQ(from_model_domain(Tensor(1, 1, 1, -7.0f)).at(0, 0, 0), 0.0f);
}

TEST(ModelDomain, RoundTrip) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(3, 17, 9, rng);
  EXPECT_LE(testing::max_abs_diff(from_model_domain(to_model_domain(x)), x), 1e-7);
}

TEST(ReflectIndex, FoldsRepeatedly) {
  EXPECT_EQ(reflect_index(-1, 4), 1);
  EXPECT_EQ(reflect_index(4, 4), 2);
  EXPECT_EQ(reflect_index(-5, 4), 1);
  EXPECT_EQ(reflect_index(7, 4), 1);
  EXPECT_EQ(reflect_index(-3, 1), 0);
  EXPECT_EQ(reflect_index(-1, 2), 1);
  EXPECT_EQ(reflect_index(2, 2), 0);
}

}  // namespace
}  // namespace llenhance
