#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deepir::detail {

/// Little-endian serializer used by the DIRW/DIRF/DIRN formats.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes);
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_i32(std::int32_t v);
  void put_f32(float v);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string get_bytes(std::size_t n);
  std::uint16_t get_u16();
  std::uint32_t get_u32();
  std::int32_t get_i32();
  float get_f32();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace deepir::detail
