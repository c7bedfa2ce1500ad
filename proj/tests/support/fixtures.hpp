#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "deepir/tensor.hpp"
#include "deepir/weights.hpp"

namespace deepir::testing {

/// Uniform random feature map in [lo, hi).
FeatureMap random_features(int h, int w, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0, int layer = 0);

/// Deterministic synthetic photograph-like scene: smooth background gradient,
/// a few filled disks and boxes, and mild pixel noise.
Image synthetic_scene(int h, int w, std::uint64_t seed);

/// Uniform random image in [0, 255].
Image random_image(int h, int w, std::uint64_t seed);

/// Shared narrow random backbone (width divisor 8), built once per process.
const WeightsBundle& small_weights();

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "deepir");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace deepir::testing
