#pragma once

#include <cstdint>
#include <string_view>

#include "rgbdfuse/dataset.h"

namespace rgbdfuse {

// Which modality carries class identity in a synthetic dataset.
//  kRgbOnly:       texture encodes the class; depth profile is random.
//  kDepthOnly:     3D surface profile encodes the class; texture is random.
//  kComplementary: class = (profile, texture) product code with two
//                  textures, so neither modality alone separates all classes.
//  kAspectOnly:    tight object crops whose aspect ratio encodes the class;
//                  profile and texture are random.
enum class InformativenessMode { kRgbOnly, kDepthOnly, kComplementary, kAspectOnly };

InformativenessMode ParseInformativenessMode(std::string_view name);
std::string_view InformativenessModeName(InformativenessMode mode);

inline constexpr int kNumSurfaceProfiles = 6;
inline constexpr int kNumTextures = 6;

struct SyntheticSceneConfig {
  int num_classes = 4;
  int instances_per_class = 3;
  int frames_per_instance = 12;
  int side = 48;  // longer image side
  InformativenessMode mode = InformativenessMode::kComplementary;
  // Adds random dropout blobs to every depth frame.
  bool noisy_depth = false;
  std::uint64_t seed = 0;

  // Throws kConfig.
  void Validate() const;
};

// Profile and texture ids used for a class, per the informativeness mode;
// -1 means "drawn at random per instance".
struct ClassCode {
  int profile = -1;
  int texture = -1;
  double aspect = 1.0;  // width / height of the object crop
};
ClassCode ClassCodeFor(const SyntheticSceneConfig& cfg, int class_id);

// Renders paired RGB / depth frames of textured objects over a background
// plane. Instances differ in size, base depth, colour and pose; frames of an
// instance differ by small pose jitter. Deterministic in cfg.seed.
Dataset GenerateSynthetic(const SyntheticSceneConfig& cfg);

}  // namespace rgbdfuse
