#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace deepir {

/// One 3x3 convolution with weights laid out [out][in][kh][kw].
struct ConvLayer {
  std::string name;
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Preprocess {
  std::array<double, 3> mean_rgb{0.0, 0.0, 0.0};
  double scale = 1.0;
};

/// Truncated VGG-19 parameters, conv1_1 through conv4_1.
///
/// The canonical network has channel ladder 64/128/256/512. A bundle whose
/// every layer is narrowed by the same power-of-two divisor is also accepted;
/// synthetic bundles used for testing and benchmarking rely on that.
struct WeightsBundle {
  std::vector<ConvLayer> layers;
  Preprocess preprocess;

  const ConvLayer& layer(std::string_view name) const;
  /// Canonical width / actual width, 1 for a full VGG-19 export.
  int width_divisor() const;
};

struct TopologyEntry {
  std::string_view name;
  int out_channels;
  int in_channels;
};

/// Layer order serialized by the exporter and expected by the loader.
inline constexpr std::array<TopologyEntry, 9> kVggTopology{{
    {"conv1_1", 64, 3},
    {"conv1_2", 64, 64},
    {"conv2_1", 128, 64},
    {"conv2_2", 128, 128},
    {"conv3_1", 256, 128},
    {"conv3_2", 256, 256},
    {"conv3_3", 256, 256},
    {"conv3_4", 256, 256},
    {"conv4_1", 512, 256},
}};

/// Throws FormatError when the layers do not follow kVggTopology (names, order,
/// 3x3 kernels, consistent width divisor) or a parameter is non-finite.
void validate_topology(const WeightsBundle& bundle);

/// DIRW reader. Checks magic, version, CRC32, topology and finiteness.
WeightsBundle load_weights(const std::filesystem::path& path);
WeightsBundle parse_weights(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_weights(const WeightsBundle& bundle);
void save_weights(const std::filesystem::path& path, const WeightsBundle& bundle);

/// He-initialized random weights following kVggTopology with every channel
/// count divided by `width_divisor` (a power of two dividing 64).
WeightsBundle make_random_weights(std::uint64_t seed, int width_divisor = 1);

}  // namespace deepir
