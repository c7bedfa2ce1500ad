#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deepir/backbone.hpp"
#include "deepir/feature_operator.hpp"
#include "deepir/inversion.hpp"
#include "deepir/metrics.hpp"
#include "deepir/nnf.hpp"
#include "deepir/tensor.hpp"

namespace deepir {

struct RetargetConfig {
  double epsilon = 0.5;
  Axis axis = Axis::Columns;
  /// Fusion weight for levels 1, 2, 3 (index 0 is level 1).
  std::array<double, 3> alphas{0.7, 0.8, 0.9};
  std::uint64_t seed = 0;
  InversionConfig inversion;
  FeatureOperator op = FeatureOperator::Urs;
  std::optional<std::filesystem::path> dump_dir;

  int patchmatch_iterations = 5;
  int feature_patch_radius = 1;
  int vote_patch_radius = 2;
  bool normalize_features = true;
  /// Search the resampled-feature field with PatchMatch instead of using the
  /// operator's exact index map.
  bool search_resampled = false;
  bool compute_metrics = true;
  /// Abort with an Error when any single stage exceeds this many seconds.
  std::optional<double> stage_timeout_seconds;

  /// Throws ArgumentError on epsilon/alpha/iteration values out of range.
  void validate() const;
};

struct StageTiming {
  std::string stage;
  double millis = 0.0;
};

struct RetargetResult {
  Image image;
  /// Pixel-level correspondence from the output into the input.
  NNField pixel_map;
  /// Fused field at levels 1, 2, 3 (index 0 is level 1).
  std::array<NNField, 3> per_layer_fields;
  /// Inversion loss traces for levels 1, 2, 3.
  std::array<std::vector<double>, 3> loss_traces;
  /// FRR/FD of the output; NaN when metrics are disabled or the output is
  /// smaller than the backbone's minimum input.
  Scores metrics;
  std::vector<StageTiming> timings;
};

/// Retargeted extent at every pyramid level, finest first: level 1 gets
/// round(epsilon * extent), each coarser level the ceil-half of the one below
/// so that the backbone maps one onto the next.
std::array<int, kPyramidDepth> level_targets(int extent, double epsilon);

RetargetResult retarget(const Image& original, const WeightsBundle& w, const RetargetConfig& cfg);

}  // namespace deepir
