#pragma once

#include <Eigen/Core>

#include <vector>

#include "deepir/tensor.hpp"

namespace deepir {

/// Per-position channel sum of a feature map (h x w).
Eigen::MatrixXd importance_map(const FeatureMap& f);

/// Column obscurity of an importance map. `raw` is the negated column mass,
/// `normalized` its min-max normalization (all ones when every column has
/// the same mass) and `cumulative` the running sum of `normalized`.
struct ObscurityProfile {
  std::vector<double> raw;
  std::vector<double> normalized;
  std::vector<double> cumulative;

  int width() const { return static_cast<int>(normalized.size()); }

  /// Profile built from already-normalized obscurity values; raw is left
  /// equal to `normalized`.
  static ObscurityProfile from_normalized(std::vector<double> normalized);
};

ObscurityProfile obscurity_profile(const Eigen::MatrixXd& importance);

/// Columns removed and kept by uniform re-sampling, 0-based and ascending.
struct ColumnSelection {
  std::vector<int> removed;
  std::vector<int> preserved;
  int source_width = 0;
  int target_width() const { return static_cast<int>(preserved.size()); }
};

/// Sample points r * tau (r = 1..K, tau = s(w) / K) are within this much of
/// a cumulative boundary count as landing on it.
double boundary_tolerance(const ObscurityProfile& profile);

/// Uniform sampling of the cumulative obscurity: sample point t removes the
/// column j with s(j-1) < t <= s(j). Duplicate hits and shortfalls are made
/// up by the highest remaining normalized obscurity (ties: lower index), so
/// exactly width - target_width columns are removed.
ColumnSelection select_columns_to_width(const ObscurityProfile& profile, int target_width);

/// As above with target_width = round(epsilon * width), epsilon in (0, 1].
ColumnSelection select_columns(const ObscurityProfile& profile, double epsilon);

/// Gathers the preserved columns of `f` in order.
FeatureMap resample(const FeatureMap& f, const ColumnSelection& selection);

/// Selection computed from the feature map's own importance along `axis`
/// (for Rows, the selection indexes rows of `f`).
ColumnSelection urs_selection(const FeatureMap& f, int target_extent, Axis axis);

FeatureMap urs_retarget(const FeatureMap& f, double epsilon, Axis axis);

}  // namespace deepir
