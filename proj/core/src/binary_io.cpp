#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "deepir/error.hpp"

namespace deepir::detail {

void ByteWriter::put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

void ByteWriter::put_u16(std::uint16_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) buf_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
}

void ByteWriter::put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteReader::require(std::size_t n) const {
  if (n > remaining()) throw FormatError("unexpected end of data");
}

std::string ByteReader::get_bytes(std::size_t n) {
  require(n);
  std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return out;
}

std::uint16_t ByteReader::get_u16() {
  require(2);
  auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::get_u32() {
  require(4);
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | bytes_[pos_ + k];
  pos_ += 4;
  return v;
}

std::int32_t ByteReader::get_i32() { return static_cast<std::int32_t>(get_u32()); }

float ByteReader::get_f32() { return std::bit_cast<float>(get_u32()); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace deepir::detail
