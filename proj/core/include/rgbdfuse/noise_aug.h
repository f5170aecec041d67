#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rgbdfuse/image.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {

inline constexpr int kDefaultMaskSide = 256;
inline constexpr int kDensityGroupCount = 5;

// Square binary dropout pattern: 1 keeps a pixel, 0 erases it.
struct NoiseMask {
  int side = 0;
  std::vector<std::uint8_t> bits;

  static NoiseMask AllKeep(int side);

  std::size_t ErasedCount() const;
  double DropoutFraction() const;

  friend bool operator==(const NoiseMask&, const NoiseMask&) = default;
};

// Five contiguous bins over the dropout fraction. edges[0] == 0 and
// edges[5] == 1; bin 0 is [0, e1], bin g is (e_g, e_{g+1}], and a fully
// erased mask always lands in the last bin.
struct DensityGroups {
  std::array<double, kDensityGroupCount + 1> edges{0.0, 0.2, 0.4,
                                                   0.6, 0.8, 1.0};

  int GroupOf(double dropout_fraction) const;

  // Interior edges at the nearest-rank quintiles of the observed fractions.
  static DensityGroups FromQuintiles(std::span<const double> fractions);
};

// Source patches binned by density.
struct PatchPool {
  std::vector<NoiseMask> masks;
  std::vector<int> group;
  DensityGroups groups;

  int side() const { return masks.empty() ? 0 : masks.front().side; }
  std::array<std::vector<std::size_t>, kDensityGroupCount> Members() const;
};

enum class MaskSource { kImported, kSynthetic };
enum class ComposeOp { kAdd, kSubtract };

std::string_view MaskSourceName(MaskSource source);
std::string_view ComposeOpName(ComposeOp op);

struct CompositionRecord {
  int group_a = 0;
  int group_b = 0;
  std::size_t patch_a = 0;
  std::size_t patch_b = 0;
  ComposeOp op = ComposeOp::kAdd;
  bool invert = false;

  friend bool operator==(const CompositionRecord&,
                         const CompositionRecord&) = default;
};

struct MaskLibrary {
  int side = kDefaultMaskSide;
  std::vector<NoiseMask> masks;
  DensityGroups groups;
  MaskSource source = MaskSource::kSynthetic;
  std::uint64_t seed = 0;
  std::vector<CompositionRecord> log;
};

struct AugmentConfig {
  double probability = 0.5;
  std::shared_ptr<const MaskLibrary> library;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Binary missing-value indicators of uniformly placed side x side windows of
// uniformly chosen frames, binned into density quintiles. Throws
// kFrameTooSmall.
PatchPool ExtractPatches(std::span<const DepthImage> frames, std::size_t count,
                         std::uint64_t seed, int side = kDefaultMaskSide);

// Procedural stand-in for recorded sensor dropout: blobs, edge-aligned bands
// and speckle, with a log-uniform target density in [0.001, 0.6].
PatchPool SynthesizePatches(std::size_t count, std::uint64_t seed,
                            int side = kDefaultMaskSide);

// Works on dropout indicators D = 1 - bits: add is D_a | D_b, subtract is
// D_a & !D_b; `invert` flips the result. Throws kSizeMismatch.
NoiseMask ComposeMasks(const NoiseMask& a, const NoiseMask& b, ComposeOp op,
                       bool invert);

// K compositions of patch pairs from two distinct non-empty groups.
// Throws kInsufficientGroups with fewer than two non-empty groups.
MaskLibrary BuildLibrary(const PatchPool& patches, std::size_t k,
                         std::uint64_t seed,
                         MaskSource source = MaskSource::kSynthetic);

// Zeroes every channel of the pixels the mask erases. Throws kSizeMismatch
// unless the image is mask.side x mask.side.
EncodedImage ApplyMask(const EncodedImage& img, const NoiseMask& mask);

struct NoiseDraw {
  bool applied = false;
  std::size_t mask_index = 0;
};

// Keeps the image with probability 1 - cfg.probability, otherwise masks it
// with a uniformly chosen library pattern. Throws kEmptyLibrary,
// kSizeMismatch.
EncodedImage ApplyNoise(const EncodedImage& img, const AugmentConfig& cfg,
                        Rng& rng, NoiseDraw* draw = nullptr);

}  // namespace rgbdfuse
