#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "deepir/backbone.hpp"
#include "deepir/nnf.hpp"

namespace deepir {

using PyramidFields = std::array<NNField, kPyramidDepth>;

/// Feature remain ratio: mean over levels of total retargeted activation over
/// total original activation.
double frr(const FeaturePyramid& original, const FeaturePyramid& retargeted);

/// Feature dissimilarity: mean over levels of the summed squared difference
/// between the original features warped by `fields` and the retargeted ones.
double fd(const FeaturePyramid& original, const PyramidFields& fields, const FeaturePyramid& retargeted);

/// Total element count averaged over levels; FD divided by this is a
/// per-element dissimilarity.
double mean_level_size(const FeaturePyramid& pyramid);

/// Largest patch radius <= `wanted` that fits both maps.
int fitting_patch_radius(const FeatureMap& a, const FeatureMap& b, int wanted);

/// Per-level PatchMatch from retargeted into original features, started from
/// the proportional (corner-aligned) map and run with a fixed seed.
PyramidFields evaluation_fields(const FeaturePyramid& original, const FeaturePyramid& retargeted,
                                std::uint64_t seed = 0, int iterations = 5);

struct Scores {
  double frr = std::numeric_limits<double>::quiet_NaN();
  double fd = std::numeric_limits<double>::quiet_NaN();
};

Scores evaluate(const FeaturePyramid& original, const FeaturePyramid& retargeted);
Scores evaluate(const Image& original, const Image& retargeted, const WeightsBundle& w);

/// Nearest corner-aligned map from a query grid onto a source grid.
NNField proportional_field(int height, int width, int source_height, int source_width);

}  // namespace deepir
