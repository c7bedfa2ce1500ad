#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "deepir/nnf.hpp"
#include "deepir/tensor.hpp"

namespace deepir {

/// 8-connected top-to-bottom path, one column per row.
struct SeamPath {
  std::vector<int> columns;
  double energy = 0.0;
};

/// Output of a classic retargeting operator. `mapping` sends every output
/// position to the source position it was taken from (nearest sample for
/// scaling), in the orientation of the input.
template <typename Raster>
struct Retargeted {
  Raster result;
  NNField mapping;
  int offset = 0;                // crop window start along the axis
  std::vector<int> removed;      // column removal: removed indices, ascending
  std::vector<SeamPath> seams;   // seam carving: seams in carving order
};

/// Minimum-energy vertical seam by dynamic programming. Ties prefer the
/// smaller column, both for the end point and for each predecessor.
SeamPath find_vertical_seam(const Eigen::MatrixXd& energy);

/// Drops one cell per row along `seam`.
Eigen::MatrixXd remove_seam(const Eigen::MatrixXd& energy, const SeamPath& seam);

/// Start of the contiguous window of `target` columns with maximal energy.
/// Ties go to the window closest to the centered one, then to the left.
int best_crop_offset(const std::vector<double>& column_energy, int target);

/// The `removals` columns with least energy (ties: lower index), ascending.
std::vector<int> min_cost_columns(const std::vector<double>& column_energy, int removals);

/// Gradient magnitude of Rec. 601 luminance by central differences
/// (one-sided at the borders).
Eigen::MatrixXd gradient_energy(const Image& img);

Retargeted<FeatureMap> scl(const FeatureMap& f, int target_extent, Axis axis);
Retargeted<Image> scl(const Image& img, int target_extent, Axis axis);

Retargeted<FeatureMap> crop(const FeatureMap& f, int target_extent, Axis axis,
                            std::optional<int> offset = std::nullopt);
Retargeted<Image> crop(const Image& img, int target_extent, Axis axis, std::optional<int> offset = std::nullopt);

Retargeted<FeatureMap> seam_carve(const FeatureMap& f, int target_extent, Axis axis);
Retargeted<Image> seam_carve(const Image& img, int target_extent, Axis axis);

Retargeted<FeatureMap> column_removal(const FeatureMap& f, int target_extent, Axis axis);
Retargeted<Image> column_removal(const Image& img, int target_extent, Axis axis);

}  // namespace deepir
