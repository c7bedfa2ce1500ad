#include "deepir/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <memory>
#include <vector>

#include "binary_io.hpp"
#include "deepir/error.hpp"

namespace deepir {

namespace {

Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
    throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  std::vector<double> data(buf.begin(), buf.end());
  return Image(static_cast<int>(image.height), static_cast<int>(image.width), std::move(data));
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

[[noreturn]] void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

Image read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw Error("cannot open " + path.string());
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  // Everything that must survive a longjmp lives outside this frame's locals.
  std::vector<std::uint8_t> pixels;
  int height = 0, width = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("cannot decode JPEG " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  height = static_cast<int>(cinfo.output_height);
  width = static_cast<int>(cinfo.output_width);
  pixels.resize(static_cast<std::size_t>(height) * width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return Image(height, width, std::vector<double>(pixels.begin(), pixels.end()));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::uint8_t sig[8] = {};
  {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) throw Error("cannot open " + path.string());
    if (std::fread(sig, 1, sizeof sig, file.get()) < 3) throw FormatError("file too short: " + path.string());
  }
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (sig[0] == 0xff && sig[1] == 0xd8 && sig[2] == 0xff) return read_jpeg(path);
  throw FormatError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> buf(img.data().size());
  auto src = img.data();
  for (std::size_t k = 0; k < buf.size(); ++k)
    buf[k] = static_cast<std::uint8_t>(std::clamp(std::floor(src[k] + 0.5), 0.0, 255.0));
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
}

Image hstack(const std::vector<Image>& images, int gap) {
  if (images.empty()) throw ArgumentError("nothing to stack");
  int height = 0, width = 0;
  for (const auto& im : images) {
    height = std::max(height, im.height());
    width += im.width();
  }
  width += gap * static_cast<int>(images.size() - 1);
  Image out(height, width, 255.0);
  int x0 = 0;
  for (const auto& im : images) {
    for (int i = 0; i < im.height(); ++i)
      for (int j = 0; j < im.width(); ++j)
        for (int c = 0; c < Image::kChannels; ++c) out.at(i, x0 + j, c) = im.at(i, j, c);
    x0 += im.width() + gap;
  }
  return out;
}

}  // namespace deepir
