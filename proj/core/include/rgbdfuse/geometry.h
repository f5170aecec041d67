#pragma once

#include <string_view>

#include "rgbdfuse/image.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {

enum class ResizeMode { kWarp, kTileBorders };

ResizeMode ParseResizeMode(std::string_view name);
std::string_view ResizeModeName(ResizeMode mode);

struct ResizePolicy {
  ResizeMode mode = ResizeMode::kTileBorders;
  int target_side = 256;
};

struct CropSpec {
  int crop_side = 227;
  bool flip = false;
  int offset_x = 0;
  int offset_y = 0;
};

// Bilinear resampling with pixel-center alignment; an equal-size resize is the
// identity.
EncodedImage ResizeBilinear(const EncodedImage& img, int out_width,
                            int out_height);

// Square target x target output, aspect ratio discarded.
EncodedImage ResizeWarp(const EncodedImage& img, int target);

// Scales the longer side to `target`, then fills the short axis by replicating
// the scaled image's boundary rows (landscape) or columns (portrait). The
// deficit is split evenly; an odd extra pixel goes to the bottom/right.
EncodedImage ResizeTile(const EncodedImage& img, int target);

// Short-axis extent after scaling the longer side to `target`.
int ScaledShortSide(int width, int height, int target);

EncodedImage Resize(const EncodedImage& img, const ResizePolicy& policy);

// Extracts the crop and mirrors it left-right when spec.flip is set.
// Throws kOutOfBounds if the crop leaves the source.
EncodedImage CropAndFlip(const EncodedImage& img, const CropSpec& spec);

// Uniform offsets and a fair flip coin drawn from the caller's generator.
CropSpec RandomCrop(int width, int height, int crop_side, Rng& rng);

// Deterministic evaluation crop: centered, no flip.
CropSpec CenterCrop(int width, int height, int crop_side);

}  // namespace rgbdfuse
