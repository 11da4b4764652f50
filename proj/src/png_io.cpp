#include "spinex/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace spinex {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Grid read_png_gray(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw std::runtime_error("not a PNG file: " + path);
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("corrupt PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": expected single-channel PNG (got color type " +
                             std::to_string(color) + ")");
  }
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (depth == 16) png_set_swap(png); // PNG is big-endian on disk
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> data(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Grid g(h, w);
  if (depth == 16) {
    const double scale = 1.0 / 65535.0;
    for (png_uint_32 y = 0; y < h; ++y) {
      const auto* row = reinterpret_cast<const std::uint16_t*>(rows[y]);
      for (png_uint_32 x = 0; x < w; ++x) g(y, x) = row[x] * scale;
    }
  } else {
    const double scale = 1.0 / 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
      for (png_uint_32 x = 0; x < w; ++x) g(y, x) = rows[y][x] * scale;
    }
  }
  return g;
}

void write_png_gray(const std::string& path, const Grid& g) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for write: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG write failed: " + path);
  }

  const int h = grid_height(g), w = grid_width(g);
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = std::min(1.0, std::max(0.0, g(y, x)));
      row[x] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pfm(const std::string& path, const Grid& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const int h = grid_height(g), w = grid_width(g);
  out << "Pf\n" << w << " " << h << "\n-1.0\n"; // negative scale = little endian
  std::vector<float> row(w);
  for (int y = h - 1; y >= 0; --y) { // PFM stores scanlines bottom-up
    for (int x = 0; x < w; ++x) row[x] = static_cast<float>(g(y, x));
    out.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * w);
  }
  if (!out) throw std::runtime_error("PFM write failed: " + path);
}

Grid read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0 || scale >= 0.0) {
    throw std::runtime_error(path + ": unsupported PFM header");
  }
  in.get(); // single whitespace after the header
  Grid g(h, w);
  std::vector<float> row(w);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), sizeof(float) * w);
    for (int x = 0; x < w; ++x) g(y, x) = row[x];
  }
  if (!in) throw std::runtime_error(path + ": truncated PFM");
  return g;
}

} // namespace spinex
