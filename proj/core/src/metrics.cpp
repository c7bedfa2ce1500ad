#include "deepir/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "deepir/error.hpp"

namespace deepir {

namespace {

double total(const FeatureMap& f) {
  double s = 0.0;
  for (double v : f.data()) s += v;
  return s;
}

}  // namespace

double frr(const FeaturePyramid& original, const FeaturePyramid& retargeted) {
  double acc = 0.0;
  for (int l = 1; l <= kPyramidDepth; ++l) {
    if (original.level(l).channels() != retargeted.level(l).channels())
      throw ShapeError("FRR: pyramids come from different backbones");
    const double denom = total(original.level(l));
    if (!(denom > 0.0)) throw NumericError("FRR: original level " + std::to_string(l) + " has no activation");
    acc += total(retargeted.level(l)) / denom;
  }
  return acc / kPyramidDepth;
}

double fd(const FeaturePyramid& original, const PyramidFields& fields, const FeaturePyramid& retargeted) {
  double acc = 0.0;
  for (int l = 1; l <= kPyramidDepth; ++l) {
    const FeatureMap& ret = retargeted.level(l);
    const NNField& field = fields[l - 1];
    if (field.height() != ret.height() || field.width() != ret.width())
      throw ShapeError("FD: field does not cover the retargeted level");
    const FeatureMap warped = warp(original.level(l), field);
    if (!warped.same_shape(ret)) throw ShapeError("FD: channel mismatch");
    auto a = warped.data();
    auto b = ret.data();
    double level = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) level += (a[k] - b[k]) * (a[k] - b[k]);
    acc += level;
  }
  return acc / kPyramidDepth;
}

double mean_level_size(const FeaturePyramid& pyramid) {
  double n = 0.0;
  for (const auto& f : pyramid.levels) n += static_cast<double>(f.size());
  return n / kPyramidDepth;
}

int fitting_patch_radius(const FeatureMap& a, const FeatureMap& b, int wanted) {
  const int smallest = std::min({a.height(), a.width(), b.height(), b.width()});
  return std::clamp((smallest - 1) / 2, 0, wanted);
}

NNField proportional_field(int height, int width, int source_height, int source_width) {
  NNField f(height, width, source_height, source_width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      f.at(i, j).i = static_cast<int>(std::floor(corner_aligned_coordinate(i, source_height, height) + 0.5));
      f.at(i, j).j = static_cast<int>(std::floor(corner_aligned_coordinate(j, source_width, width) + 0.5));
    }
  return f;
}

PyramidFields evaluation_fields(const FeaturePyramid& original, const FeaturePyramid& retargeted,
                                std::uint64_t seed, int iterations) {
  PyramidFields fields;
  for (int l = 1; l <= kPyramidDepth; ++l) {
    const FeatureMap& ret = retargeted.level(l);
    const FeatureMap& orig = original.level(l);
    const NNField init = proportional_field(ret.height(), ret.width(), orig.height(), orig.width());
    PatchMatchOptions options;
    options.patch_radius = fitting_patch_radius(ret, orig, 1);
    options.iterations = iterations;
    options.seed = seed;
    options.initial = &init;
    fields[l - 1] = patchmatch(ret, orig, options);
  }
  return fields;
}

Scores evaluate(const FeaturePyramid& original, const FeaturePyramid& retargeted) {
  return {frr(original, retargeted), fd(original, evaluation_fields(original, retargeted), retargeted)};
}

Scores evaluate(const Image& original, const Image& retargeted, const WeightsBundle& w) {
  return evaluate(extract_pyramid(original, w), extract_pyramid(retargeted, w));
}

}  // namespace deepir
