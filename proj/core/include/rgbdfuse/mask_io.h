#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rgbdfuse/noise_aug.h"

namespace rgbdfuse {

inline constexpr char kMaskMagic[8] = {'R', 'G', 'B', 'D', 'M', 'A', 'S', 'K'};
inline constexpr std::uint32_t kMaskFormatVersion = 1;

// Run lengths alternating keep/erase, always starting with a keep run (which
// may be empty).
std::vector<std::uint32_t> EncodeRuns(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> DecodeRuns(std::span<const std::uint32_t> runs,
                                     std::size_t pixel_count);

// Binary container:
//   "RGBDMASK" | version u32 | side u32 | K u64 | seed u64
//   then per mask: run count u32 | run lengths u32...
// all little-endian. The JSON sidecar at SidecarPath(path) carries the group
// edges, source and composition log.
void WriteMaskLibrary(const MaskLibrary& lib,
                      const std::filesystem::path& path);
MaskLibrary ReadMaskLibrary(const std::filesystem::path& path);

std::filesystem::path SidecarPath(const std::filesystem::path& path);

}  // namespace rgbdfuse
