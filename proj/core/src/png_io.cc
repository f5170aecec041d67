#include "rgbdfuse/png_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "rgbdfuse/error.h"

namespace rgbdfuse {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

// Decoded raster with either 8- or 16-bit samples.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

Raster ReadRaster(const std::filesystem::path& path) {
  FilePtr file = OpenFile(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng allocation failed");
  }
  Raster raster;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormat, "corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.channels = png_get_channels(png, info);
  raster.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * raster.height);
  rows.resize(raster.height);
  for (int y = 0; y < raster.height; ++y) rows[y] = &buffer[y * stride];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n =
      static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  raster.samples.resize(n);
  if (raster.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raster.samples[i] =
          static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raster.samples[i] = buffer[i];
  }
  return raster;
}

void WriteRaster(const std::filesystem::path& path, int width, int height,
                 int color_type, int bit_depth,
                 const std::vector<png_byte>& bytes) {
  FilePtr file = OpenFile(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng allocation failed");
  }
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = bytes.size() / height;
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(&bytes[y * stride]);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DepthImage ReadDepthPng(const std::filesystem::path& path) {
  const Raster r = ReadRaster(path);
  if (r.channels != 1) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": depth PNG must have a single channel");
  }
  std::vector<float> mm(r.samples.begin(), r.samples.end());
  return DepthImage::FromMillimeters(r.width, r.height, std::move(mm));
}

void WriteDepthPng(const DepthImage& depth, const std::filesystem::path& path) {
  depth.Validate();
  std::vector<png_byte> bytes(depth.size() * 2);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double v =
        depth.missing[i] ? 0.0
                         : std::clamp(std::floor(depth.values[i] + 0.5), 0.0,
                                      65535.0);
    const auto u = static_cast<std::uint16_t>(v);
    bytes[2 * i] = static_cast<png_byte>(u >> 8);  // PNG is big-endian
    bytes[2 * i + 1] = static_cast<png_byte>(u & 0xff);
  }
  WriteRaster(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, bytes);
}

EncodedImage ReadRgbPng(const std::filesystem::path& path) {
  const Raster r = ReadRaster(path);
  EncodedImage img(r.width, r.height);
  const int shift = r.bit_depth == 16 ? 8 : 0;
  for (std::size_t p = 0; p < static_cast<std::size_t>(r.width) * r.height;
       ++p) {
    const std::uint16_t* s = &r.samples[p * r.channels];
    for (int c = 0; c < 3; ++c) {
      const int src = r.channels >= 3 ? c : 0;
      img.values[p * 3 + c] = static_cast<std::uint8_t>(s[src] >> shift);
    }
  }
  return img;
}

void WriteRgbPng(const EncodedImage& img, const std::filesystem::path& path) {
  img.Validate();
  WriteRaster(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8,
              std::vector<png_byte>(img.values.begin(), img.values.end()));
}

std::vector<DepthImage> ReadDepthDirectory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<DepthImage> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(ReadDepthPng(f));
  return frames;
}

}  // namespace rgbdfuse
