#include <gtest/gtest.h>

#include <cmath>

#include "deepir/error.hpp"
#include "deepir/metrics.hpp"
#include "fixtures.hpp"

namespace deepir {
namespace {

using testing::random_features;

FeaturePyramid random_pyramid(std::uint64_t seed) {
  FeaturePyramid p;
  const int heights[] = {12, 6, 3, 2};
  const int widths[] = {11, 5, 3, 2};
  for (int l = 1; l <= 4; ++l)
    p.level(l) = random_features(heights[l - 1], widths[l - 1], 2 * l, seed + l, 0.0, 1.0, l);
  return p;
}

PyramidFields identity_fields(const FeaturePyramid& p) {
  PyramidFields f;
  for (int l = 1; l <= 4; ++l) f[l - 1] = identity_field(p.level(l).height(), p.level(l).width());
  return f;
}

TEST(Frr, IdentityIsOne) {
  const FeaturePyramid p = random_pyramid(1);
  EXPECT_EQ(frr(p, p), 1.0);
}

TEST(Frr, HalfMassIsHalf) {
  const FeaturePyramid p = random_pyramid(2);
  FeaturePyramid half = p;
  for (auto& f : half.levels)
    for (double& v : f.data()) v *= 0.5;
  EXPECT_DOUBLE_EQ(frr(p, half), 0.5);
}

TEST(Frr, InvariantUnderColumnPermutation) {
  const FeaturePyramid p = random_pyramid(3);
  FeaturePyramid permuted = p;
  for (auto& f : permuted.levels) {
    const FeatureMap src = f;
    for (int c = 0; c < f.channels(); ++c)
      for (int i = 0; i < f.height(); ++i)
        for (int j = 0; j < f.width(); ++j) f.at(i, j, c) = src.at(i, f.width() - 1 - j, c);
  }
  EXPECT_NEAR(frr(p, permuted), 1.0, 1e-14);
}

TEST(Frr, Errors) {
  FeaturePyramid p = random_pyramid(4);
  FeaturePyramid zero = p;
  for (double& v : zero.level(2).data()) v = 0.0;
  EXPECT_THROW(frr(zero, p), NumericError);
  FeaturePyramid other = p;
  other.level(3) = random_features(3, 3, 5, 1);
  EXPECT_THROW(frr(p, other), ShapeError);
}

TEST(Fd, IdentityIsZero) {
  const FeaturePyramid p = random_pyramid(5);
  EXPECT_EQ(fd(p, identity_fields(p), p), 0.0);
}

TEST(Fd, SingleElementDifference) {
  const FeaturePyramid p = random_pyramid(6);
  FeaturePyramid q = p;
  q.level(3).at(1, 2, 3) += 0.3;
  EXPECT_NEAR(fd(p, identity_fields(p), q), 0.09 / 4, 1e-15);
}

TEST(Fd, Errors) {
  const FeaturePyramid p = random_pyramid(7);
  PyramidFields fields = identity_fields(p);
  fields[1] = identity_field(2, 2);
  EXPECT_THROW(fd(p, fields, p), ShapeError);
}

TEST(Metrics, Helpers) {
  const FeaturePyramid p = random_pyramid(8);
  double n = 0;
  for (const auto& f : p.levels) n += f.size();
  EXPECT_DOUBLE_EQ(mean_level_size(p), n / 4);
  EXPECT_EQ(fitting_patch_radius(FeatureMap(4, 9, 1), FeatureMap(9, 9, 1), 3), 1);
  EXPECT_EQ(fitting_patch_radius(FeatureMap(2, 9, 1), FeatureMap(9, 9, 1), 3), 0);
  EXPECT_EQ(fitting_patch_radius(FeatureMap(20, 20, 1), FeatureMap(20, 20, 1), 2), 2);

  const NNField prop = proportional_field(3, 4, 5, 10);
  EXPECT_EQ(prop.at(0, 0).i, 0);
  EXPECT_EQ(prop.at(2, 3).i, 4);
  EXPECT_EQ(prop.at(2, 3).j, 9);
  EXPECT_EQ(prop.at(1, 1).j, 3);
  EXPECT_TRUE(proportional_field(6, 7, 6, 7).same_mapping(identity_field(6, 7)));
}

TEST(Metrics, EvaluateIdenticalImages) {
  const Image img = testing::synthetic_scene(40, 48, 1);
  const Scores s = evaluate(img, img, testing::small_weights());
  EXPECT_EQ(s.frr, 1.0);
  EXPECT_EQ(s.fd, 0.0);
}

TEST(Metrics, EvaluationIsDeterministicAndPositive) {
  const auto& w = testing::small_weights();
  const Image img = testing::synthetic_scene(48, 64, 2);
  Image narrow(48, 40);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 40; ++j)
      for (int c = 0; c < 3; ++c) narrow.at(i, j, c) = img.at(i, j + 12, c);
  const Scores a = evaluate(img, narrow, w);
  const Scores b = evaluate(img, narrow, w);
  EXPECT_EQ(a.frr, b.frr);
  EXPECT_EQ(a.fd, b.fd);
  EXPECT_GT(a.frr, 0.3);
  EXPECT_LT(a.frr, 1.0);
  EXPECT_GT(a.fd, 0.0);
}

}  // namespace
}  // namespace deepir
