#include "deepir/urs.hpp"

#include <algorithm>
#include <cmath>

#include "deepir/error.hpp"

namespace deepir {

Eigen::MatrixXd importance_map(const FeatureMap& f) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(f.height(), f.width());
  for (int c = 0; c < f.channels(); ++c)
    for (int i = 0; i < f.height(); ++i)
      for (int j = 0; j < f.width(); ++j) m(i, j) += f.at(i, j, c);
  return m;
}

ObscurityProfile ObscurityProfile::from_normalized(std::vector<double> normalized) {
  ObscurityProfile p;
  p.raw = normalized;
  p.normalized = std::move(normalized);
  p.cumulative.resize(p.normalized.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < p.normalized.size(); ++j) p.cumulative[j] = acc += p.normalized[j];
  return p;
}

ObscurityProfile obscurity_profile(const Eigen::MatrixXd& importance) {
  const auto w = importance.cols();
  if (w < 2) throw ArgumentError("obscurity profile needs at least 2 columns");
  std::vector<double> raw(w);
  for (Eigen::Index j = 0; j < w; ++j) raw[j] = -importance.col(j).sum();

  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  const double magnitude = std::max(std::abs(*hi), std::abs(*lo));
  std::vector<double> normalized(w, 1.0);
  if (range > 1e-12 * magnitude && range > 0.0) {
    for (Eigen::Index j = 0; j < w; ++j) normalized[j] = (raw[j] - *lo) / range;
  }
  ObscurityProfile p = ObscurityProfile::from_normalized(std::move(normalized));
  p.raw = std::move(raw);
  return p;
}

double boundary_tolerance(const ObscurityProfile& profile) {
  return profile.cumulative.empty() ? 0.0 : 1e-9 * std::abs(profile.cumulative.back());
}

ColumnSelection select_columns_to_width(const ObscurityProfile& profile, int target_width) {
  const int w = profile.width();
  if (target_width < 1 || target_width > w) throw ArgumentError("target width must be in [1, width]");
  const int removals = w - target_width;

  ColumnSelection sel;
  sel.source_width = w;
  std::vector<bool> removed(w, false);
  int count = 0;
  if (removals > 0) {
    const double total = profile.cumulative.back();
    const double tol = boundary_tolerance(profile);
    int j = 0;
    for (int r = 1; r <= removals; ++r) {
      const double t = r == removals ? total : r * total / removals;
      while (j < w && t > profile.cumulative[j] + tol) ++j;
      if (j == w) break;
      const double left = j == 0 ? 0.0 : profile.cumulative[j - 1];
      if (t > left + tol && !removed[j]) {
        removed[j] = true;
        ++count;
      }
    }
  }
  while (count < removals) {
    int best = -1;
    for (int j = 0; j < w; ++j)
      if (!removed[j] && (best < 0 || profile.normalized[j] > profile.normalized[best])) best = j;
    removed[best] = true;
    ++count;
  }
  for (int j = 0; j < w; ++j) (removed[j] ? sel.removed : sel.preserved).push_back(j);
  return sel;
}

ColumnSelection select_columns(const ObscurityProfile& profile, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("epsilon must be in (0,1]");
  const int target = retargeted_extent(epsilon, profile.width());
  if (target < 1) throw ArgumentError("epsilon removes every column");
  return select_columns_to_width(profile, target);
}

FeatureMap resample(const FeatureMap& f, const ColumnSelection& selection) {
  if (selection.source_width != f.width()) throw ShapeError("column selection was built for a different width");
  FeatureMap out(f.height(), selection.target_width(), f.channels(), f.layer());
  for (int c = 0; c < f.channels(); ++c)
    for (int i = 0; i < f.height(); ++i)
      for (int k = 0; k < selection.target_width(); ++k) out.at(i, k, c) = f.at(i, selection.preserved[k], c);
  return out;
}

ColumnSelection urs_selection(const FeatureMap& f, int target_extent, Axis axis) {
  const Eigen::MatrixXd m = importance_map(f);
  const auto profile = axis == Axis::Columns ? obscurity_profile(m) : obscurity_profile(m.transpose());
  return select_columns_to_width(profile, target_extent);
}

FeatureMap urs_retarget(const FeatureMap& f, double epsilon, Axis axis) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("epsilon must be in (0,1]");
  const int extent = axis == Axis::Columns ? f.width() : f.height();
  const int target = retargeted_extent(epsilon, extent);
  if (target < 1) throw ArgumentError("epsilon removes every column");
  if (axis == Axis::Columns) return resample(f, urs_selection(f, target, axis));
  FeatureMap t = transpose_spatial(f);
  return transpose_spatial(resample(t, urs_selection(f, target, axis)));
}

}  // namespace deepir
