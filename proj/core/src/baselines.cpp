#include "deepir/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deepir/error.hpp"
#include "deepir/urs.hpp"

namespace deepir {

SeamPath find_vertical_seam(const Eigen::MatrixXd& energy) {
  const auto h = energy.rows(), w = energy.cols();
  if (h < 1 || w < 1) throw ShapeError("seam search on empty energy map");
  Eigen::MatrixXd cost(h, w);
  Eigen::MatrixXi parent = Eigen::MatrixXi::Zero(h, w);
  cost.row(0) = energy.row(0);
  for (Eigen::Index i = 1; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      Eigen::Index best = j > 0 ? j - 1 : j;
      for (Eigen::Index p = best + 1; p <= std::min(j + 1, w - 1); ++p)
        if (cost(i - 1, p) < cost(i - 1, best)) best = p;
      cost(i, j) = cost(i - 1, best) + energy(i, j);
      parent(i, j) = static_cast<int>(best);
    }
  }
  Eigen::Index end = 0;
  for (Eigen::Index j = 1; j < w; ++j)
    if (cost(h - 1, j) < cost(h - 1, end)) end = j;

  SeamPath seam;
  seam.columns.resize(h);
  seam.energy = cost(h - 1, end);
  seam.columns[h - 1] = static_cast<int>(end);
  for (Eigen::Index i = h - 1; i > 0; --i) seam.columns[i - 1] = parent(i, seam.columns[i]);
  return seam;
}

Eigen::MatrixXd remove_seam(const Eigen::MatrixXd& energy, const SeamPath& seam) {
  const auto h = energy.rows(), w = energy.cols();
  if (static_cast<Eigen::Index>(seam.columns.size()) != h || w < 2) throw ShapeError("seam does not fit energy map");
  Eigen::MatrixXd out(h, w - 1);
  for (Eigen::Index i = 0; i < h; ++i) {
    const int cut = seam.columns[i];
    for (Eigen::Index j = 0, k = 0; j < w; ++j)
      if (j != cut) out(i, k++) = energy(i, j);
  }
  return out;
}

int best_crop_offset(const std::vector<double>& column_energy, int target) {
  const int w = static_cast<int>(column_energy.size());
  if (target < 1 || target > w) throw ArgumentError("crop target must be in [1, width]");
  const int windows = w - target + 1;
  std::vector<double> sums(windows, 0.0);
  for (int o = 0; o < windows; ++o)
    for (int j = o; j < o + target; ++j) sums[o] += column_energy[j];
  const double best = *std::max_element(sums.begin(), sums.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  const double center = 0.5 * (w - target);
  int chosen = -1;
  for (int o = 0; o < windows; ++o) {
    if (sums[o] < best - tol) continue;
    if (chosen < 0 || std::abs(o - center) < std::abs(chosen - center)) chosen = o;
  }
  return chosen;
}

std::vector<int> min_cost_columns(const std::vector<double>& column_energy, int removals) {
  const int w = static_cast<int>(column_energy.size());
  if (removals < 0 || removals >= w) throw ArgumentError("column removal count must be in [0, width)");
  std::vector<int> order(w);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return column_energy[a] < column_energy[b]; });
  std::vector<int> removed(order.begin(), order.begin() + removals);
  std::sort(removed.begin(), removed.end());
  return removed;
}

Eigen::MatrixXd gradient_energy(const Image& img) {
  const int h = img.height(), w = img.width();
  Eigen::MatrixXd lum(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) lum(i, j) = 0.299 * img.at(i, j, 0) + 0.587 * img.at(i, j, 1) + 0.114 * img.at(i, j, 2);
  Eigen::MatrixXd e(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int l = std::max(j - 1, 0), r = std::min(j + 1, w - 1);
      const int u = std::max(i - 1, 0), d = std::min(i + 1, h - 1);
      const double gx = r > l ? (lum(i, r) - lum(i, l)) / (r - l) : 0.0;
      const double gy = d > u ? (lum(d, j) - lum(u, j)) / (d - u) : 0.0;
      e(i, j) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return e;
}

namespace {

FeatureMap blank_like(const FeatureMap& f, int h, int w) { return FeatureMap(h, w, f.channels(), f.layer()); }
Image blank_like(const Image&, int h, int w) { return Image(h, w); }
int channel_count(const FeatureMap& f) { return f.channels(); }
int channel_count(const Image&) { return Image::kChannels; }

Eigen::MatrixXd energy_of(const FeatureMap& f) { return importance_map(f); }
Eigen::MatrixXd energy_of(const Image& img) { return gradient_energy(img); }

std::vector<double> column_sums(const Eigen::MatrixXd& m) {
  std::vector<double> sums(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) sums[j] = m.col(j).sum();
  return sums;
}

/// Gathers source columns row by row: out(i, k) = src(i, columns[i][k]).
template <typename Raster>
Raster gather(const Raster& src, const std::vector<std::vector<int>>& columns) {
  const int h = src.height();
  const int t = static_cast<int>(columns.front().size());
  Raster out = blank_like(src, h, t);
  for (int c = 0; c < channel_count(src); ++c)
    for (int i = 0; i < h; ++i)
      for (int k = 0; k < t; ++k) out.at(i, k, c) = src.at(i, columns[i][k], c);
  return out;
}

NNField field_from_columns(int source_width, const std::vector<std::vector<int>>& columns) {
  const int h = static_cast<int>(columns.size());
  const int t = static_cast<int>(columns.front().size());
  NNField field(h, t, h, source_width);
  for (int i = 0; i < h; ++i)
    for (int k = 0; k < t; ++k) field.at(i, k) = {i, columns[i][k], 0.0};
  return field;
}

std::vector<std::vector<int>> same_columns(int h, const std::vector<int>& cols) {
  return std::vector<std::vector<int>>(h, cols);
}

void check_target(int target, int extent) {
  if (target < 1 || target > extent) throw ArgumentError("target extent must be in [1, source extent]");
}

template <typename Raster>
Retargeted<Raster> transpose_result(Retargeted<Raster> r) {
  r.result = transpose_spatial(r.result);
  r.mapping = transpose_field(r.mapping);
  return r;
}

/// Runs a column operator directly, or on the transposed raster for rows.
template <typename Raster, typename Op>
Retargeted<Raster> along_axis(const Raster& src, int target, Axis axis, Op&& op) {
  if (axis == Axis::Columns) {
    check_target(target, src.width());
    return op(src);
  }
  check_target(target, src.height());
  return transpose_result(op(transpose_spatial(src)));
}

template <typename Raster>
Retargeted<Raster> scl_columns(const Raster& src, int target) {
  Retargeted<Raster> r;
  r.result = bilinear_resize(src, src.height(), target);
  std::vector<int> cols(target);
  for (int k = 0; k < target; ++k)
    cols[k] = static_cast<int>(std::floor(corner_aligned_coordinate(k, src.width(), target) + 0.5));
  r.mapping = field_from_columns(src.width(), same_columns(src.height(), cols));
  return r;
}

template <typename Raster>
Retargeted<Raster> crop_columns(const Raster& src, int target, std::optional<int> offset) {
  Retargeted<Raster> r;
  if (offset) {
    if (*offset < 0 || *offset + target > src.width()) throw ArgumentError("crop offset out of range");
    r.offset = *offset;
  } else {
    r.offset = best_crop_offset(column_sums(energy_of(src)), target);
  }
  std::vector<int> cols(target);
  std::iota(cols.begin(), cols.end(), r.offset);
  auto rows = same_columns(src.height(), cols);
  r.result = gather(src, rows);
  r.mapping = field_from_columns(src.width(), rows);
  return r;
}

template <typename Raster>
Retargeted<Raster> column_removal_columns(const Raster& src, int target) {
  Retargeted<Raster> r;
  r.removed = min_cost_columns(column_sums(energy_of(src)), src.width() - target);
  std::vector<int> cols;
  for (int j = 0, k = 0; j < src.width(); ++j) {
    if (k < static_cast<int>(r.removed.size()) && r.removed[k] == j) {
      ++k;
      continue;
    }
    cols.push_back(j);
  }
  auto rows = same_columns(src.height(), cols);
  r.result = gather(src, rows);
  r.mapping = field_from_columns(src.width(), rows);
  return r;
}

void drop_seam(std::vector<std::vector<int>>& columns, const SeamPath& seam) {
  for (std::size_t i = 0; i < columns.size(); ++i) columns[i].erase(columns[i].begin() + seam.columns[i]);
}

Retargeted<FeatureMap> seam_carve_columns(const FeatureMap& src, int target) {
  Retargeted<FeatureMap> r;
  std::vector<int> all(src.width());
  std::iota(all.begin(), all.end(), 0);
  auto rows = same_columns(src.height(), all);
  // Importance is per position, so carving the energy map is equivalent to
  // recomputing it on the carved features.
  Eigen::MatrixXd energy = importance_map(src);
  for (int k = src.width(); k > target; --k) {
    SeamPath seam = find_vertical_seam(energy);
    energy = remove_seam(energy, seam);
    drop_seam(rows, seam);
    r.seams.push_back(std::move(seam));
  }
  r.result = gather(src, rows);
  r.mapping = field_from_columns(src.width(), rows);
  return r;
}

Retargeted<Image> seam_carve_columns(const Image& src, int target) {
  Retargeted<Image> r;
  std::vector<int> all(src.width());
  std::iota(all.begin(), all.end(), 0);
  auto rows = same_columns(src.height(), all);
  Image current = src;
  for (int k = src.width(); k > target; --k) {
    SeamPath seam = find_vertical_seam(gradient_energy(current));
    std::vector<std::vector<int>> keep(current.height());
    for (int i = 0; i < current.height(); ++i)
      for (int j = 0; j < current.width(); ++j)
        if (j != seam.columns[i]) keep[i].push_back(j);
    current = gather(current, keep);
    drop_seam(rows, seam);
    r.seams.push_back(std::move(seam));
  }
  r.result = std::move(current);
  r.mapping = field_from_columns(src.width(), rows);
  return r;
}

}  // namespace

Retargeted<FeatureMap> scl(const FeatureMap& f, int target, Axis axis) {
  return along_axis(f, target, axis, [&](const FeatureMap& x) { return scl_columns(x, target); });
}
Retargeted<Image> scl(const Image& img, int target, Axis axis) {
  return along_axis(img, target, axis, [&](const Image& x) { return scl_columns(x, target); });
}

Retargeted<FeatureMap> crop(const FeatureMap& f, int target, Axis axis, std::optional<int> offset) {
  return along_axis(f, target, axis, [&](const FeatureMap& x) { return crop_columns(x, target, offset); });
}
Retargeted<Image> crop(const Image& img, int target, Axis axis, std::optional<int> offset) {
  return along_axis(img, target, axis, [&](const Image& x) { return crop_columns(x, target, offset); });
}

Retargeted<FeatureMap> seam_carve(const FeatureMap& f, int target, Axis axis) {
  return along_axis(f, target, axis, [&](const FeatureMap& x) { return seam_carve_columns(x, target); });
}
Retargeted<Image> seam_carve(const Image& img, int target, Axis axis) {
  return along_axis(img, target, axis, [&](const Image& x) { return seam_carve_columns(x, target); });
}

Retargeted<FeatureMap> column_removal(const FeatureMap& f, int target, Axis axis) {
  return along_axis(f, target, axis, [&](const FeatureMap& x) { return column_removal_columns(x, target); });
}
Retargeted<Image> column_removal(const Image& img, int target, Axis axis) {
  return along_axis(img, target, axis, [&](const Image& x) { return column_removal_columns(x, target); });
}

}  // namespace deepir
