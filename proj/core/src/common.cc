#include <cmath>
#include <string>

#include "rgbdfuse/error.h"
#include "rgbdfuse/image.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kAllMissing: return "AllMissing";
    case ErrorCode::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kFrameTooSmall: return "FrameTooSmall";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kInsufficientGroups: return "InsufficientGroups";
    case ErrorCode::kEmptyLibrary: return "EmptyLibrary";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotPretrained: return "NotPretrained";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kTooFewInstances: return "TooFewInstances";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFormat: return "FormatError";
  }
  return "Unknown";
}

DepthImage DepthImage::FromMillimeters(int width, int height,
                                       std::vector<float> millimeters) {
  DepthImage d;
  d.width = width;
  d.height = height;
  d.values = std::move(millimeters);
  d.missing.resize(d.values.size());
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    d.missing[i] = d.values[i] == 0.0f ? 1 : 0;
  }
  d.Validate();
  return d;
}

void DepthImage::Validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "depth image must be non-empty");
  }
  const auto n = static_cast<std::size_t>(width) * height;
  if (values.size() != n || missing.size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth buffer size does not match " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw Error(ErrorCode::kInvalidArgument,
                  "depth values must be finite and non-negative");
    }
  }
}

void EncodedImage::Validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "encoded image must be non-empty");
  }
  if (values.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoded buffer size does not match dimensions");
  }
}

std::uint8_t RoundToByte(double v) {
  const double r = std::floor(v + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

std::size_t Rng::Index(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Rng::Index needs n > 0");
  }
  const std::uint64_t range = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label) {
  // FNV-1a over the label, mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(master ^ SplitMix64(h));
}

}  // namespace rgbdfuse
