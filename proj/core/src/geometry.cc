#include "rgbdfuse/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

ResizeMode ParseResizeMode(std::string_view name) {
  if (name == "warp") return ResizeMode::kWarp;
  if (name == "tile") return ResizeMode::kTileBorders;
  throw Error(ErrorCode::kConfig, "unknown resize mode '" + std::string(name) +
                                      "' (expected warp|tile)");
}

std::string_view ResizeModeName(ResizeMode mode) {
  return mode == ResizeMode::kWarp ? "warp" : "tile";
}

namespace {

struct Tap {
  int i0;
  int i1;
  double frac;
};

std::vector<Tap> BilinearTaps(int in_size, int out_size) {
  std::vector<Tap> taps(out_size);
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * in_size / out_size - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_size - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

void CheckTarget(int target) {
  if (target <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize target must be positive");
  }
}

}  // namespace

EncodedImage ResizeBilinear(const EncodedImage& img, int out_width,
                            int out_height) {
  img.Validate();
  CheckTarget(out_width);
  CheckTarget(out_height);
  if (out_width == img.width && out_height == img.height) return img;

  const auto xt = BilinearTaps(img.width, out_width);
  const auto yt = BilinearTaps(img.height, out_height);
  EncodedImage out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = yt[y];
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = xt[x];
      for (int c = 0; c < EncodedImage::kChannels; ++c) {
        const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.frac) +
                           img.at(tx.i1, ty.i0, c) * tx.frac;
        const double bottom = img.at(tx.i0, ty.i1, c) * (1.0 - tx.frac) +
                              img.at(tx.i1, ty.i1, c) * tx.frac;
        out.at(x, y, c) = RoundToByte(top * (1.0 - ty.frac) + bottom * ty.frac);
      }
    }
  }
  return out;
}

EncodedImage ResizeWarp(const EncodedImage& img, int target) {
  return ResizeBilinear(img, target, target);
}

int ScaledShortSide(int width, int height, int target) {
  const int longer = std::max(width, height);
  const int shorter = std::min(width, height);
  const int n = static_cast<int>(
      std::floor(static_cast<double>(shorter) * target / longer + 0.5));
  return std::clamp(n, 1, target);
}

EncodedImage ResizeTile(const EncodedImage& img, int target) {
  img.Validate();
  CheckTarget(target);
  if (img.width == img.height) return ResizeWarp(img, target);

  const bool landscape = img.width > img.height;
  const int n = ScaledShortSide(img.width, img.height, target);
  const EncodedImage scaled = landscape ? ResizeBilinear(img, target, n)
                                        : ResizeBilinear(img, n, target);
  const int deficit = target - n;
  const int before = deficit / 2;

  EncodedImage out(target, target);
  for (int y = 0; y < target; ++y) {
    for (int x = 0; x < target; ++x) {
      const int sx = landscape ? x : std::clamp(x - before, 0, n - 1);
      const int sy = landscape ? std::clamp(y - before, 0, n - 1) : y;
      for (int c = 0; c < EncodedImage::kChannels; ++c) {
        out.at(x, y, c) = scaled.at(sx, sy, c);
      }
    }
  }
  return out;
}

EncodedImage Resize(const EncodedImage& img, const ResizePolicy& policy) {
  return policy.mode == ResizeMode::kWarp ? ResizeWarp(img, policy.target_side)
                                          : ResizeTile(img, policy.target_side);
}

EncodedImage CropAndFlip(const EncodedImage& img, const CropSpec& spec) {
  img.Validate();
  if (spec.crop_side <= 0 || spec.offset_x < 0 || spec.offset_y < 0 ||
      spec.offset_x + spec.crop_side > img.width ||
      spec.offset_y + spec.crop_side > img.height) {
    throw Error(ErrorCode::kOutOfBounds,
                "crop " + std::to_string(spec.crop_side) + "@(" +
                    std::to_string(spec.offset_x) + "," +
                    std::to_string(spec.offset_y) + ") exceeds " +
                    std::to_string(img.width) + "x" +
                    std::to_string(img.height));
  }
  const int side = spec.crop_side;
  EncodedImage out(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int sx = spec.offset_x + (spec.flip ? side - 1 - x : x);
      for (int c = 0; c < EncodedImage::kChannels; ++c) {
        out.at(x, y, c) = img.at(sx, spec.offset_y + y, c);
      }
    }
  }
  return out;
}

CropSpec RandomCrop(int width, int height, int crop_side, Rng& rng) {
  if (crop_side <= 0 || crop_side > width || crop_side > height) {
    throw Error(ErrorCode::kOutOfBounds, "crop side larger than source");
  }
  CropSpec spec;
  spec.crop_side = crop_side;
  spec.offset_x = static_cast<int>(rng.Index(width - crop_side + 1));
  spec.offset_y = static_cast<int>(rng.Index(height - crop_side + 1));
  spec.flip = rng.Bernoulli(0.5);
  return spec;
}

CropSpec CenterCrop(int width, int height, int crop_side) {
  if (crop_side <= 0 || crop_side > width || crop_side > height) {
    throw Error(ErrorCode::kOutOfBounds, "crop side larger than source");
  }
  CropSpec spec;
  spec.crop_side = crop_side;
  spec.offset_x = (width - crop_side) / 2;
  spec.offset_y = (height - crop_side) / 2;
  return spec;
}

}  // namespace rgbdfuse
