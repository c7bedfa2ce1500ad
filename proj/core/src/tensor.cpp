#include "deepir/tensor.hpp"

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "deepir/error.hpp"

namespace deepir {

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ShapeError("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * kChannels, fill);
}

Image::Image(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) throw ShapeError("image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * width * kChannels)
    throw ShapeError("image data length does not match dimensions");
}

FeatureMap::FeatureMap(int height, int width, int channels, int layer)
    : height_(height), width_(width), channels_(channels), layer_(layer) {
  if (height < 1 || width < 1 || channels < 1) throw ShapeError("feature map dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
}

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<double> data, int layer)
    : height_(height), width_(width), channels_(channels), layer_(layer), data_(std::move(data)) {
  if (height < 1 || width < 1 || channels < 1) throw ShapeError("feature map dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels)
    throw ShapeError("feature map data length does not match dimensions");
}

FeatureMap transpose_spatial(const FeatureMap& f) {
  FeatureMap out(f.width(), f.height(), f.channels(), f.layer());
  for (int c = 0; c < f.channels(); ++c)
    for (int i = 0; i < f.height(); ++i)
      for (int j = 0; j < f.width(); ++j) out.at(j, i, c) = f.at(i, j, c);
  return out;
}

Image transpose_spatial(const Image& img) {
  Image out(img.width(), img.height());
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j)
      for (int c = 0; c < Image::kChannels; ++c) out.at(j, i, c) = img.at(i, j, c);
  return out;
}

double corner_aligned_coordinate(int k, int source_extent, int target_extent) {
  if (source_extent == 1) return 0.0;
  if (target_extent == 1) return 0.5 * (source_extent - 1);
  return static_cast<double>(k) * (source_extent - 1) / (target_extent - 1);
}

namespace {

struct Tap {
  int lo;
  int hi;
  double t;
};

std::vector<Tap> make_taps(int source_extent, int target_extent) {
  std::vector<Tap> taps(target_extent);
  for (int k = 0; k < target_extent; ++k) {
    if (source_extent == 1) {
      taps[k] = {0, 0, 0.0};
    } else if (target_extent == 1) {
      taps[k] = {0, source_extent - 1, 0.5};
    } else {
      double pos = corner_aligned_coordinate(k, source_extent, target_extent);
      int lo = static_cast<int>(std::floor(pos));
      if (lo >= source_extent - 1) lo = source_extent - 1;
      int hi = lo + 1 < source_extent ? lo + 1 : lo;
      taps[k] = {lo, hi, pos - lo};
    }
  }
  return taps;
}

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

template <typename Sample>
void resample_plane(int new_height, int new_width, const std::vector<Tap>& rows, const std::vector<Tap>& cols,
                    Sample&& sample, auto&& store) {
  for (int i = 0; i < new_height; ++i) {
    const Tap& r = rows[i];
    for (int j = 0; j < new_width; ++j) {
      const Tap& c = cols[j];
      double top = lerp(sample(r.lo, c.lo), sample(r.lo, c.hi), c.t);
      double bottom = lerp(sample(r.hi, c.lo), sample(r.hi, c.hi), c.t);
      store(i, j, lerp(top, bottom, r.t));
    }
  }
}

void check_target(int new_height, int new_width) {
  if (new_height < 1 || new_width < 1) throw ArgumentError("resize target dimensions must be positive");
}

}  // namespace

FeatureMap bilinear_resize(const FeatureMap& f, int new_height, int new_width) {
  check_target(new_height, new_width);
  if (new_height == f.height() && new_width == f.width()) return f;
  auto rows = make_taps(f.height(), new_height);
  auto cols = make_taps(f.width(), new_width);
  FeatureMap out(new_height, new_width, f.channels(), f.layer());
  for (int c = 0; c < f.channels(); ++c) {
    resample_plane(
        new_height, new_width, rows, cols, [&](int i, int j) { return f.at(i, j, c); },
        [&](int i, int j, double v) { out.at(i, j, c) = v; });
  }
  return out;
}

Image bilinear_resize(const Image& img, int new_height, int new_width) {
  check_target(new_height, new_width);
  if (new_height == img.height() && new_width == img.width()) return img;
  auto rows = make_taps(img.height(), new_height);
  auto cols = make_taps(img.width(), new_width);
  Image out(new_height, new_width);
  for (int c = 0; c < Image::kChannels; ++c) {
    resample_plane(
        new_height, new_width, rows, cols, [&](int i, int j) { return img.at(i, j, c); },
        [&](int i, int j, double v) { out.at(i, j, c) = v; });
  }
  return out;
}

int retargeted_extent(double epsilon, int extent) {
  // Small bias keeps exact halves (0.35 * 10) rounding up despite binary representation.
  return static_cast<int>(std::floor(epsilon * extent + 0.5 + 1e-9));
}

namespace {
constexpr std::string_view kFeatureMagic = "DIRF";
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

void write_feature_dump(const std::filesystem::path& path, const FeatureMap& f) {
  detail::ByteWriter w;
  w.put_bytes(kFeatureMagic);
  w.put_u32(kFeatureVersion);
  w.put_u32(static_cast<std::uint32_t>(f.layer()));
  w.put_u32(static_cast<std::uint32_t>(f.height()));
  w.put_u32(static_cast<std::uint32_t>(f.width()));
  w.put_u32(static_cast<std::uint32_t>(f.channels()));
  for (double v : f.data()) w.put_f32(static_cast<float>(v));
  detail::write_file(path, w.bytes());
}

FeatureMap read_feature_dump(const std::filesystem::path& path) {
  auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  if (r.get_bytes(4) != kFeatureMagic) throw FormatError("bad magic in feature dump " + path.string());
  if (r.get_u32() != kFeatureVersion) throw FormatError("unsupported feature dump version");
  int layer = static_cast<int>(r.get_u32());
  int h = static_cast<int>(r.get_u32());
  int w = static_cast<int>(r.get_u32());
  int c = static_cast<int>(r.get_u32());
  if (h < 1 || w < 1 || c < 1) throw FormatError("feature dump has empty dimensions");
  std::size_t n = static_cast<std::size_t>(h) * w * c;
  if (r.remaining() != n * 4) throw FormatError("feature dump payload size mismatch");
  std::vector<double> data(n);
  for (auto& v : data) v = r.get_f32();
  return FeatureMap(h, w, c, std::move(data), layer);
}

}  // namespace deepir
