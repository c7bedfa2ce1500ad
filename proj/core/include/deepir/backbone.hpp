#pragma once

#include <array>
#include <string_view>

#include "deepir/tensor.hpp"
#include "deepir/weights.hpp"

namespace deepir {

struct PyramidLevelSpec {
  int level;
  std::string_view tap;
  int stride;
  int channels;  // canonical VGG-19 width
};

inline constexpr std::array<PyramidLevelSpec, 4> kPyramidLevels{{
    {1, "relu1_1", 1, 64},
    {2, "relu2_1", 2, 128},
    {3, "relu3_1", 4, 256},
    {4, "relu4_1", 8, 512},
}};

inline constexpr int kPyramidDepth = 4;
inline constexpr int kMinImageExtent = 32;

/// Four feature levels, addressed 1-based like the tap names.
struct FeaturePyramid {
  std::array<FeatureMap, kPyramidDepth> levels;

  FeatureMap& level(int l) { return levels.at(l - 1); }
  const FeatureMap& level(int l) const { return levels.at(l - 1); }
};

/// Channel count of pyramid level `level` under `w` (respects width divisor).
int level_channels(const WeightsBundle& w, int level);

/// Spatial extent of level `level` for an input extent (ceil pooling).
int level_extent(int input_extent, int level);

/// Preprocessed planar input, (pixel - mean) * scale per channel.
FeatureMap preprocess(const Image& img, const WeightsBundle& w);

FeaturePyramid extract_pyramid(const Image& img, const WeightsBundle& w);

/// Runs the sub-network between tap L-1 and tap L. The level of `x` is
/// inferred from its channel count; the result is tagged with level L.
FeatureMap forward_between(const FeatureMap& x, const WeightsBundle& w);

struct LossAndGradient {
  double loss = 0.0;
  FeatureMap gradient;
};

/// Squared Frobenius residual ||forward_between(x) - target||^2 and its exact
/// gradient with respect to x. ReLU subgradient at 0 is 0.
LossAndGradient loss_and_gradient(const FeatureMap& x, const FeatureMap& target, const WeightsBundle& w);

/// Loss only; cheaper than loss_and_gradient (no tape).
double feature_loss(const FeatureMap& x, const FeatureMap& target, const WeightsBundle& w);

}  // namespace deepir
