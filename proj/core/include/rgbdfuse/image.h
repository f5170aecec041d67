#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rgbdfuse {

// Single-channel depth frame. Raw frames hold millimeters; normalized frames
// hold levels in [0, 255]. A pixel is missing when its flag is set, which for
// raw frames is exactly the pixels whose reading is 0.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> missing;

  DepthImage() = default;

  // Builds a raw frame; zero readings are flagged missing. Throws on a size
  // mismatch or a negative / non-finite value.
  static DepthImage FromMillimeters(int width, int height,
                                    std::vector<float> millimeters);

  std::size_t size() const { return values.size(); }
  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  bool is_missing(int x, int y) const {
    return missing[static_cast<std::size_t>(y) * width + x] != 0;
  }

  // Throws kInvalidArgument when any invariant is broken.
  void Validate() const;
};

// Three-channel 8-bit image, row-major with interleaved channels.
struct EncodedImage {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  EncodedImage() = default;
  EncodedImage(int w, int h)
      : width(w),
        height(h),
        values(static_cast<std::size_t>(w) * h * kChannels, 0) {}

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * kChannels + c;
  }
  std::uint8_t at(int x, int y, int c) const { return values[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return values[index(x, y, c)]; }

  void Validate() const;

  friend bool operator==(const EncodedImage&, const EncodedImage&) = default;
};

// Round half up, then clamp into the 8-bit range.
std::uint8_t RoundToByte(double v);

}  // namespace rgbdfuse
