#pragma once

#include <filesystem>
#include <vector>

#include "rgbdfuse/image.h"

namespace rgbdfuse {

// 16-bit (or 8-bit) single-channel PNG; value = millimeters, 0 = missing.
DepthImage ReadDepthPng(const std::filesystem::path& path);
// Values are rounded and clamped to 16 bits.
void WriteDepthPng(const DepthImage& depth, const std::filesystem::path& path);

// Gray, gray+alpha, RGB and RGBA inputs are all converted to 8-bit RGB.
EncodedImage ReadRgbPng(const std::filesystem::path& path);
void WriteRgbPng(const EncodedImage& img, const std::filesystem::path& path);

// Every *.png in `dir`, sorted by filename, decoded as depth.
std::vector<DepthImage> ReadDepthDirectory(const std::filesystem::path& dir);

}  // namespace rgbdfuse
