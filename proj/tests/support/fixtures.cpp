#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <random>

#include <unistd.h>

namespace deepir::testing {

FeatureMap random_features(int h, int w, int c, std::uint64_t seed, double lo, double hi, int layer) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  FeatureMap f(h, w, c, layer);
  for (auto& v : f.data()) v = u(rng);
  return f;
}

Image synthetic_scene(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 4.0);

  Image img(h, w);
  double top[3], bottom[3];
  for (int c = 0; c < 3; ++c) {
    top[c] = 60.0 + 150.0 * u(rng);
    bottom[c] = 20.0 + 120.0 * u(rng);
  }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double t = h > 1 ? static_cast<double>(i) / (h - 1) : 0.0;
      for (int c = 0; c < 3; ++c) img.at(i, j, c) = top[c] + t * (bottom[c] - top[c]);
    }

  const int shapes = 3 + static_cast<int>(u(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const double ci = u(rng) * h, cj = u(rng) * w;
    const double size = (0.08 + 0.2 * u(rng)) * std::min(h, w);
    const bool disk = u(rng) < 0.5;
    double color[3];
    for (double& v : color) v = 255.0 * u(rng);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double di = i - ci, dj = j - cj;
        const bool inside = disk ? di * di + dj * dj <= size * size
                                 : std::abs(di) <= size && std::abs(dj) <= 0.6 * size;
        if (inside)
          for (int c = 0; c < 3; ++c) img.at(i, j, c) = color[c];
      }
  }
  for (auto& v : img.data()) v = std::clamp(std::round(v + noise(rng)), 0.0, 255.0);
  return img;
}

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Image img(h, w);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

const WeightsBundle& small_weights() {
  static const WeightsBundle bundle = make_random_weights(2024, 8);
  return bundle;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace deepir::testing
