#include "deepir/weights.hpp"

#include <zlib.h>

#include <cmath>
#include <random>

#include "binary_io.hpp"
#include "deepir/error.hpp"

namespace deepir {

namespace {

constexpr std::string_view kMagic = "DIRW";
constexpr std::uint32_t kVersion = 1;

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, data, static_cast<uInt>(n)));
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

const ConvLayer& WeightsBundle::layer(std::string_view name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw ArgumentError("no layer named " + std::string(name));
}

int WeightsBundle::width_divisor() const {
  if (layers.empty() || layers.front().out_channels <= 0) return 1;
  return kVggTopology.front().out_channels / layers.front().out_channels;
}

void validate_topology(const WeightsBundle& bundle) {
  if (bundle.layers.size() != kVggTopology.size())
    throw FormatError("topology mismatch: expected " + std::to_string(kVggTopology.size()) + " conv layers, got " +
                      std::to_string(bundle.layers.size()));
  const int first_out = bundle.layers.front().out_channels;
  if (first_out <= 0 || kVggTopology.front().out_channels % first_out != 0 ||
      !is_power_of_two(kVggTopology.front().out_channels / first_out))
    throw FormatError("topology mismatch: conv1_1 width " + std::to_string(first_out) +
                      " is not a power-of-two reduction of 64");
  const int divisor = kVggTopology.front().out_channels / first_out;

  for (std::size_t k = 0; k < kVggTopology.size(); ++k) {
    const auto& spec = kVggTopology[k];
    const auto& l = bundle.layers[k];
    if (l.name != spec.name)
      throw FormatError("topology mismatch: layer " + std::to_string(k) + " is " + l.name + ", expected " +
                        std::string(spec.name));
    const int want_in = k == 0 ? 3 : spec.in_channels / divisor;
    if (l.out_channels != spec.out_channels / divisor || l.in_channels != want_in)
      throw FormatError("topology mismatch: unexpected channel counts at layer " + l.name);
    if (l.kernel_h != 3 || l.kernel_w != 3) throw FormatError("topology mismatch: layer " + l.name + " is not 3x3");
    const std::size_t expect = static_cast<std::size_t>(l.out_channels) * l.in_channels * 9;
    if (l.weights.size() != expect || l.bias.size() != static_cast<std::size_t>(l.out_channels))
      throw FormatError("topology mismatch: parameter count of layer " + l.name);
    for (double v : l.weights)
      if (!std::isfinite(v)) throw FormatError("non-finite parameter at layer " + l.name);
    for (double v : l.bias)
      if (!std::isfinite(v)) throw FormatError("non-finite parameter at layer " + l.name);
  }
  for (double m : bundle.preprocess.mean_rgb)
    if (!std::isfinite(m)) throw FormatError("non-finite preprocessing mean");
  if (!std::isfinite(bundle.preprocess.scale)) throw FormatError("non-finite preprocessing scale");
}

WeightsBundle parse_weights(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || r.get_bytes(4) != kMagic) throw FormatError("bad magic");
  if (r.get_u32() != kVersion) throw FormatError("unsupported weights version");
  if (bytes.size() < 12) throw FormatError("weights file truncated");
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader tail(std::span<const std::uint8_t>(bytes).subspan(body));
  if (tail.get_u32() != crc32_of(bytes.data(), body)) throw FormatError("checksum mismatch");

  WeightsBundle bundle;
  for (auto& m : bundle.preprocess.mean_rgb) m = r.get_f32();
  bundle.preprocess.scale = r.get_f32();
  const std::uint32_t count = r.get_u32();
  if (count > 64) throw FormatError("topology mismatch: implausible layer count");
  for (std::uint32_t k = 0; k < count; ++k) {
    ConvLayer l;
    l.name = r.get_bytes(r.get_u16());
    l.out_channels = static_cast<int>(r.get_u32());
    l.in_channels = static_cast<int>(r.get_u32());
    l.kernel_h = static_cast<int>(r.get_u32());
    l.kernel_w = static_cast<int>(r.get_u32());
    const std::size_t n = static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel_h * l.kernel_w;
    if (n * 4 > r.remaining()) throw FormatError("weights file truncated at layer " + l.name);
    l.weights.resize(n);
    for (auto& v : l.weights) v = r.get_f32();
    l.bias.resize(l.out_channels);
    for (auto& v : l.bias) v = r.get_f32();
    bundle.layers.push_back(std::move(l));
  }
  if (r.remaining() != 4) throw FormatError("trailing bytes after last layer");
  validate_topology(bundle);
  return bundle;
}

WeightsBundle load_weights(const std::filesystem::path& path) { return parse_weights(detail::read_file(path)); }

std::vector<std::uint8_t> serialize_weights(const WeightsBundle& bundle) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(kVersion);
  for (double m : bundle.preprocess.mean_rgb) w.put_f32(static_cast<float>(m));
  w.put_f32(static_cast<float>(bundle.preprocess.scale));
  w.put_u32(static_cast<std::uint32_t>(bundle.layers.size()));
  for (const auto& l : bundle.layers) {
    w.put_u16(static_cast<std::uint16_t>(l.name.size()));
    w.put_bytes(l.name);
    w.put_u32(static_cast<std::uint32_t>(l.out_channels));
    w.put_u32(static_cast<std::uint32_t>(l.in_channels));
    w.put_u32(static_cast<std::uint32_t>(l.kernel_h));
    w.put_u32(static_cast<std::uint32_t>(l.kernel_w));
    for (double v : l.weights) w.put_f32(static_cast<float>(v));
    for (double v : l.bias) w.put_f32(static_cast<float>(v));
  }
  std::vector<std::uint8_t> out = w.bytes();
  const std::uint32_t crc = crc32_of(out.data(), out.size());
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((crc >> shift) & 0xff));
  return out;
}

void save_weights(const std::filesystem::path& path, const WeightsBundle& bundle) {
  detail::write_file(path, serialize_weights(bundle));
}

WeightsBundle make_random_weights(std::uint64_t seed, int width_divisor) {
  if (!is_power_of_two(width_divisor) || 64 % width_divisor != 0)
    throw ArgumentError("width divisor must be a power of two dividing 64");
  std::mt19937_64 rng(seed);
  WeightsBundle bundle;
  bundle.preprocess.mean_rgb = {123.68, 116.78, 103.94};
  bundle.preprocess.scale = 1.0 / 64.0;
  for (std::size_t k = 0; k < kVggTopology.size(); ++k) {
    const auto& spec = kVggTopology[k];
    ConvLayer l;
    l.name = std::string(spec.name);
    l.out_channels = spec.out_channels / width_divisor;
    l.in_channels = k == 0 ? 3 : spec.in_channels / width_divisor;
    std::normal_distribution<double> weight(0.0, std::sqrt(2.0 / (l.in_channels * 9)));
    std::uniform_real_distribution<double> bias(-0.05, 0.15);
    l.weights.resize(static_cast<std::size_t>(l.out_channels) * l.in_channels * 9);
    // Round through float so a save/load round trip is lossless.
    for (auto& v : l.weights) v = static_cast<float>(weight(rng));
    l.bias.resize(l.out_channels);
    for (auto& v : l.bias) v = static_cast<float>(bias(rng));
    bundle.layers.push_back(std::move(l));
  }
  for (auto& m : bundle.preprocess.mean_rgb) m = static_cast<float>(m);
  bundle.preprocess.scale = static_cast<float>(bundle.preprocess.scale);
  return bundle;
}

}  // namespace deepir
