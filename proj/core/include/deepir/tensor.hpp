#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace deepir {

enum class Axis { Columns, Rows };

/// RGB raster, values in [0, 255], interleaved row-major (HWC).
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  double& at(int i, int j, int c) { return data_[index(i, j, c)]; }
  double at(int i, int j, int c) const { return data_[index(i, j, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * width_ + j) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// h x w x c activation tensor stored as channel-outer row-major planes (CHW).
/// `layer` is the pyramid level it belongs to (1..4), or 0 when unattached.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, int layer = 0);
  FeatureMap(int height, int width, int channels, std::vector<double> data, int layer = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  int layer() const { return layer_; }
  void set_layer(int layer) { layer_ = layer; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  double& at(int i, int j, int c) { return data_[index(i, j, c)]; }
  double at(int i, int j, int c) const { return data_[index(i, j, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(int c) { return std::span<double>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const FeatureMap& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(c) * height_ + i) * width_ + j;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  int layer_ = 0;
  std::vector<double> data_;
};

FeatureMap transpose_spatial(const FeatureMap& f);
Image transpose_spatial(const Image& img);

/// Corner-aligned bilinear resampling, each channel independently. A target
/// extent of 1 along an axis samples the mean of the two end samples.
FeatureMap bilinear_resize(const FeatureMap& f, int new_height, int new_width);
Image bilinear_resize(const Image& img, int new_height, int new_width);

/// Source coordinate sampled by output index `k` under corner alignment.
double corner_aligned_coordinate(int k, int source_extent, int target_extent);

/// round(epsilon * extent) with round-half-up, the retargeted extent.
int retargeted_extent(double epsilon, int extent);

/// DIRF debugging dump: "DIRF", u32 version, u32 layer, u32 h, u32 w, u32 c,
/// then h*w*c float32 in CHW order, all little-endian.
void write_feature_dump(const std::filesystem::path& path, const FeatureMap& f);
FeatureMap read_feature_dump(const std::filesystem::path& path);

}  // namespace deepir
