#include "sketchanim/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "sketchanim/error.hpp"

namespace sketchanim {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

void write_rows(const std::filesystem::path& path, int width, int height,
                int color_type, int channels,
                const std::vector<std::uint8_t>& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  File file = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, data.data() + std::size_t(y) * width * channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<std::uint8_t> quantize(const RasterImage& image) {
  std::vector<std::uint8_t> out(image.intensity.size());
  std::transform(image.intensity.begin(), image.intensity.end(), out.begin(),
                 [](double v) {
                   return static_cast<std::uint8_t>(
                       std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                 });
  return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  write_rows(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 1,
             quantize(image));
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 3, image.rgb);
}

RasterImage read_png_gray(const std::filesystem::path& path) {
  File file = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> row(std::size_t(width) * channels);
  RasterImage image(width, height);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = row.data() + std::size_t(x) * channels;
      const double v = channels >= 3
                           ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]
                           : px[0];
      image.at(x, y) = v / 255.0;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace sketchanim
