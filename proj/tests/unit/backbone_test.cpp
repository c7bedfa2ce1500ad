#include <gtest/gtest.h>

#include <cmath>

#include "deepir/backbone.hpp"
#include "deepir/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace deepir {
namespace {

using testing::random_features;
using testing::small_weights;

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

TEST(Backbone, PyramidShapes) {
  const auto& w = small_weights();
  const FeaturePyramid p = extract_pyramid(testing::synthetic_scene(64, 64, 1), w);
  const int widths[] = {64, 32, 16, 8};
  for (int l = 1; l <= 4; ++l) {
    EXPECT_EQ(p.level(l).width(), widths[l - 1]);
    EXPECT_EQ(p.level(l).height(), widths[l - 1]);
    EXPECT_EQ(p.level(l).channels(), kPyramidLevels[l - 1].channels / 8);
    EXPECT_EQ(p.level(l).layer(), l);
  }
}

TEST(Backbone, CeilPoolingOnOddExtents) {
  const FeaturePyramid p = extract_pyramid(testing::synthetic_scene(33, 45, 2), small_weights());
  EXPECT_EQ(p.level(4).height(), 5);  // 33 -> 17 -> 9 -> 5
  EXPECT_EQ(p.level(4).width(), 6);   // 45 -> 23 -> 12 -> 6
  EXPECT_EQ(level_extent(33, 4), 5);
  EXPECT_EQ(level_extent(45, 1), 45);
}

TEST(Backbone, RejectsSmallImages) {
  EXPECT_THROW(extract_pyramid(Image(31, 64), small_weights()), ShapeError);
  EXPECT_THROW(extract_pyramid(Image(64, 16), small_weights()), ShapeError);
}

TEST(Backbone, LevelChannelsRespectDivisor) {
  EXPECT_EQ(level_channels(small_weights(), 4), 64);
  EXPECT_EQ(level_channels(make_random_weights(0, 1), 3), 256);
  EXPECT_THROW(level_channels(small_weights(), 5), ArgumentError);
}

TEST(Backbone, PreprocessUsesBundleConstants) {
  WeightsBundle w = make_random_weights(0, 16);
  w.preprocess.mean_rgb = {10.0, 20.0, 30.0};
  w.preprocess.scale = 0.5;
  Image img(1, 1);
  img.at(0, 0, 0) = 12;
  img.at(0, 0, 1) = 20;
  img.at(0, 0, 2) = 0;
  const FeatureMap x = preprocess(img, w);
  EXPECT_DOUBLE_EQ(x.at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x.at(0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(x.at(0, 0, 2), -15.0);
}

TEST(Backbone, MatchesNaiveReference) {
  const auto& w = small_weights();
  const Image img = testing::synthetic_scene(40, 36, 3);
  const FeaturePyramid p = extract_pyramid(img, w);
  const FeatureMap level1 = oracle::naive_conv_relu(preprocess(img, w), w.layer("conv1_1"));
  EXPECT_LT(max_abs_diff(p.level(1), level1), 1e-10);
  for (int l = 2; l <= 4; ++l) {
    const FeatureMap ref = oracle::naive_forward_between(p.level(l - 1), w, l);
    ASSERT_TRUE(ref.same_shape(p.level(l)));
    EXPECT_LT(max_abs_diff(p.level(l), ref), 1e-10) << "level " << l;
  }
}

TEST(Backbone, CompositionIsBitIdentical) {
  const auto& w = small_weights();
  const FeaturePyramid p = extract_pyramid(testing::synthetic_scene(48, 56, 4), w);
  FeatureMap chained = p.level(1);
  for (int l = 2; l <= 4; ++l) {
    chained = forward_between(chained, w);
    EXPECT_EQ(chained, p.level(l));
  }
}

TEST(Backbone, OutputsAreNonNegativeAndDeterministic) {
  const auto& w = small_weights();
  const Image img = testing::random_image(32, 40, 5);
  const FeaturePyramid a = extract_pyramid(img, w);
  const FeaturePyramid b = extract_pyramid(img, w);
  for (int l = 1; l <= 4; ++l) {
    EXPECT_EQ(a.level(l), b.level(l));
    for (double v : a.level(l).data()) ASSERT_GE(v, 0.0);
  }
}

TEST(Backbone, ConstantInputGivesConstantInterior) {
  WeightsBundle w = make_random_weights(7, 16);
  w.preprocess.mean_rgb = {0.0, 0.0, 0.0};
  const FeaturePyramid p = extract_pyramid(Image(64, 64, 0.0), w);
  // Level 1 and 2 are pure bias paths away from the zero-padded border.
  for (int l = 1; l <= 2; ++l) {
    const FeatureMap& f = p.level(l);
    const int margin = 3 * l;
    for (int c = 0; c < f.channels(); ++c)
      for (int i = margin; i < f.height() - margin; ++i)
        for (int j = margin; j < f.width() - margin; ++j) ASSERT_EQ(f.at(i, j, c), f.at(margin, margin, c));
  }
  // Zero image, zero mean: level 1 is ReLU(bias of conv1_1).
  for (int c = 0; c < p.level(1).channels(); ++c)
    EXPECT_DOUBLE_EQ(p.level(1).at(10, 10, c), std::max(0.0, w.layer("conv1_1").bias[c]));
}

TEST(Backbone, ForwardBetweenShapes) {
  const auto& w = small_weights();
  const FeatureMap x = random_features(16, 16, 8, 1);
  const FeatureMap y = forward_between(x, w);
  EXPECT_EQ(y.height(), 8);
  EXPECT_EQ(y.width(), 8);
  EXPECT_EQ(y.channels(), 16);
  EXPECT_EQ(y.layer(), 2);
  for (double v : y.data()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(forward_between(random_features(8, 8, 7, 1), w), ShapeError);
  EXPECT_THROW(forward_between(random_features(8, 8, 64, 1), w), ShapeError);  // level 4 has no successor
}

TEST(Backbone, ConsistentTargetHasZeroLossAndGradient) {
  const auto& w = small_weights();
  for (int from = 1; from <= 3; ++from) {
    const FeatureMap x = random_features(8, 8, level_channels(w, from), 10 + from);
    const auto lg = loss_and_gradient(x, forward_between(x, w), w);
    EXPECT_EQ(lg.loss, 0.0);
    for (double g : lg.gradient.data()) ASSERT_EQ(g, 0.0);
    EXPECT_TRUE(lg.gradient.same_shape(x));
  }
}

TEST(Backbone, DeadReluKillsGradient) {
  WeightsBundle w = make_random_weights(3, 16);
  for (auto& l : w.layers)
    if (l.name == "conv2_1")
      for (double& b : l.bias) b = -1e6;
  const FeatureMap x = random_features(8, 8, level_channels(w, 1), 2);
  const FeatureMap target(4, 4, level_channels(w, 2));
  const auto lg = loss_and_gradient(x, target, w);
  EXPECT_EQ(lg.loss, 0.0);
  for (double g : lg.gradient.data()) ASSERT_EQ(g, 0.0);
}

TEST(Backbone, LossMatchesFeatureLossAndDefinition) {
  const auto& w = small_weights();
  const FeatureMap x = random_features(8, 8, 16, 3);
  const FeatureMap target = random_features(4, 4, 32, 4);
  const auto lg = loss_and_gradient(x, target, w);
  EXPECT_EQ(lg.loss, feature_loss(x, target, w));
  const FeatureMap y = oracle::naive_forward_between(x, w, 3);
  double direct = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) direct += std::pow(y.data()[k] - target.data()[k], 2);
  EXPECT_NEAR(lg.loss, direct, 1e-9 * direct);
}

TEST(Backbone, GradientMatchesFiniteDifferences) {
  const auto& w = small_weights();
  for (int from = 1; from <= 3; ++from) {
    const FeatureMap x = random_features(8, 8, level_channels(w, from), 100 + from);
    const FeatureMap probe = forward_between(random_features(8, 8, level_channels(w, from), 200 + from), w);
    const auto lg = loss_and_gradient(x, probe, w);
    int checked = 0;
    for (std::size_t k = 0; k < x.size(); k += 7) {
      const double g = lg.gradient.data()[k];
      if (std::abs(g) <= 1e-6) continue;
      FeatureMap plus = x, minus = x;
      plus.data()[k] += 1e-5;
      minus.data()[k] -= 1e-5;
      const FeatureMap up = forward_between(plus, w), down = forward_between(minus, w);
      double diff = 0.0;  // ||up - probe||^2 - ||down - probe||^2 without cancellation
      for (std::size_t e = 0; e < up.size(); ++e)
        diff += (up.data()[e] - down.data()[e]) * (up.data()[e] + down.data()[e] - 2.0 * probe.data()[e]);
      const double fd = diff / 2e-5;
      EXPECT_LT(std::abs(fd - g) / std::max(std::abs(fd), std::abs(g)), 1e-4) << "component " << k;
      ++checked;
    }
    EXPECT_GT(checked, 10);
  }
}

TEST(Backbone, LossShapeMismatch) {
  const auto& w = small_weights();
  const FeatureMap x = random_features(8, 8, 8, 1);
  EXPECT_THROW(loss_and_gradient(x, FeatureMap(5, 4, 16), w), ShapeError);
  EXPECT_THROW(feature_loss(x, FeatureMap(4, 4, 32), w), ShapeError);
}

}  // namespace
}  // namespace deepir
