#include "splat/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "splat/errors.hpp"

namespace splat {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

void open_reader(PngReader& r, std::FILE* f, const std::filesystem::path& path) {
  png_byte header[8];
  if (std::fread(header, 1, 8, f) != 8 || png_sig_cmp(header, 0, 8))
    throw DatasetError("png: not a PNG file: " + path.string());
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw InternalError("png: create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw InternalError("png: create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) throw DatasetError("png: decode error: " + path.string());
  png_init_io(r.png, f);
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);
}

}  // namespace

Image<std::uint8_t> read_png_rgb8(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DatasetError("png: cannot open: " + path.string());
  PngReader r;
  open_reader(r, f.get(), path);
  if (setjmp(png_jmpbuf(r.png))) throw DatasetError("png: decode error: " + path.string());

  png_set_expand(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  if (png_get_bit_depth(r.png, r.info) == 16) png_set_strip_16(r.png);
  png_read_update_info(r.png, r.info);

  const int w = static_cast<int>(png_get_image_width(r.png, r.info));
  const int h = static_cast<int>(png_get_image_height(r.png, r.info));
  if (png_get_channels(r.png, r.info) != 3)
    throw DatasetError("png: unsupported channel layout: " + path.string());

  Image<std::uint8_t> img(w, h, 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = img.data.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

Image<std::uint16_t> read_png_gray16(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DatasetError("png: cannot open: " + path.string());
  PngReader r;
  open_reader(r, f.get(), path);
  if (setjmp(png_jmpbuf(r.png))) throw DatasetError("png: decode error: " + path.string());

  if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(r.png, r.info) != 16)
    throw DatasetError("png: expected 16-bit grayscale: " + path.string());
  png_set_swap(r.png);  // PNG stores big-endian samples
  png_read_update_info(r.png, r.info);

  const int w = static_cast<int>(png_get_image_width(r.png, r.info));
  const int h = static_cast<int>(png_get_image_height(r.png, r.info));
  Image<std::uint16_t> img(w, h, 1);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = reinterpret_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * w);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_png_rgb8(const std::filesystem::path& path, const Image<std::uint8_t>& img) {
  if (img.channels != 3) throw InvalidInputError("png: write_png_rgb8 expects 3 channels");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw InvalidInputError("png: cannot open for writing: " + path.string());
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw InternalError("png: create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw InternalError("png: create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw InternalError("png: encode error: " + path.string());
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void write_png_gray16(const std::filesystem::path& path, const Image<std::uint16_t>& img) {
  if (img.channels != 1) throw InvalidInputError("png: write_png_gray16 expects 1 channel");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw InvalidInputError("png: cannot open for writing: " + path.string());
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw InternalError("png: create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw InternalError("png: create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw InternalError("png: encode error: " + path.string());
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_swap(w.png);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(img.data.data() + static_cast<std::size_t>(y) * img.width));
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

}  // namespace splat
