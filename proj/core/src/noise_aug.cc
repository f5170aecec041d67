#include "rgbdfuse/noise_aug.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

NoiseMask NoiseMask::AllKeep(int side) {
  if (side <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "mask side must be positive");
  }
  return NoiseMask{side, std::vector<std::uint8_t>(
                             static_cast<std::size_t>(side) * side, 1)};
}

std::size_t NoiseMask::ErasedCount() const {
  return static_cast<std::size_t>(
      std::count(bits.begin(), bits.end(), std::uint8_t{0}));
}

double NoiseMask::DropoutFraction() const {
  return bits.empty() ? 0.0
                      : static_cast<double>(ErasedCount()) / bits.size();
}

int DensityGroups::GroupOf(double fraction) const {
  if (fraction >= 1.0) return kDensityGroupCount - 1;
  int g = 0;
  for (int i = 1; i < kDensityGroupCount; ++i) {
    if (fraction > edges[i]) g = i;
  }
  return g;
}

DensityGroups DensityGroups::FromQuintiles(std::span<const double> fractions) {
  DensityGroups groups;
  if (fractions.empty()) return groups;
  std::vector<double> sorted(fractions.begin(), fractions.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (int i = 1; i < kDensityGroupCount; ++i) {
    // Nearest rank: ceil(i n / 5) - 1.
    std::size_t rank = (i * n + kDensityGroupCount - 1) / kDensityGroupCount;
    rank = std::clamp<std::size_t>(rank, 1, n) - 1;
    groups.edges[i] = sorted[rank];
  }
  groups.edges[0] = 0.0;
  groups.edges[kDensityGroupCount] = 1.0;
  return groups;
}

std::array<std::vector<std::size_t>, kDensityGroupCount> PatchPool::Members()
    const {
  std::array<std::vector<std::size_t>, kDensityGroupCount> members;
  for (std::size_t i = 0; i < group.size(); ++i) {
    members[group[i]].push_back(i);
  }
  return members;
}

std::string_view MaskSourceName(MaskSource source) {
  return source == MaskSource::kImported ? "imported" : "synthetic";
}

std::string_view ComposeOpName(ComposeOp op) {
  return op == ComposeOp::kAdd ? "add" : "subtract";
}

void AugmentConfig::Validate() const {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::kConfig, "noise probability must lie in [0, 1]");
  }
}

namespace {

PatchPool BinPatches(std::vector<NoiseMask> masks) {
  PatchPool pool;
  std::vector<double> fractions;
  fractions.reserve(masks.size());
  for (const auto& m : masks) fractions.push_back(m.DropoutFraction());
  pool.groups = DensityGroups::FromQuintiles(fractions);
  pool.group.reserve(masks.size());
  for (double f : fractions) pool.group.push_back(pool.groups.GroupOf(f));
  pool.masks = std::move(masks);
  return pool;
}

// Accumulates erased pixels on a mask and tracks how many are erased.
class DropoutCanvas {
 public:
  explicit DropoutCanvas(int side)
      : side_(side), mask_(NoiseMask::AllKeep(side)) {}

  void Erase(int x, int y) {
    if (x < 0 || y < 0 || x >= side_ || y >= side_) return;
    auto& b = mask_.bits[static_cast<std::size_t>(y) * side_ + x];
    if (b) {
      b = 0;
      ++erased_;
    }
  }

  void Ellipse(double cx, double cy, double rx, double ry, double angle) {
    const double r = std::max(rx, ry);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int y = static_cast<int>(std::floor(cy - r));
         y <= static_cast<int>(std::ceil(cy + r)); ++y) {
      for (int x = static_cast<int>(std::floor(cx - r));
           x <= static_cast<int>(std::ceil(cx + r)); ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = (c * dx + s * dy) / rx;
        const double v = (-s * dx + c * dy) / ry;
        if (u * u + v * v <= 1.0) Erase(x, y);
      }
    }
  }

  // Thick segment, i.e. the rim left along an object boundary.
  void Band(double x0, double y0, double x1, double y1, double half_width) {
    const double lx = x1 - x0;
    const double ly = y1 - y0;
    const double len2 = std::max(lx * lx + ly * ly, 1e-9);
    const int xmin = static_cast<int>(std::floor(std::min(x0, x1) - half_width));
    const int xmax = static_cast<int>(std::ceil(std::max(x0, x1) + half_width));
    const int ymin = static_cast<int>(std::floor(std::min(y0, y1) - half_width));
    const int ymax = static_cast<int>(std::ceil(std::max(y0, y1) + half_width));
    for (int y = std::max(ymin, 0); y <= std::min(ymax, side_ - 1); ++y) {
      for (int x = std::max(xmin, 0); x <= std::min(xmax, side_ - 1); ++x) {
        const double t =
            std::clamp(((x - x0) * lx + (y - y0) * ly) / len2, 0.0, 1.0);
        const double dx = x - (x0 + t * lx);
        const double dy = y - (y0 + t * ly);
        if (dx * dx + dy * dy <= half_width * half_width) Erase(x, y);
      }
    }
  }

  std::size_t erased() const { return erased_; }
  NoiseMask Take() { return std::move(mask_); }

 private:
  int side_;
  NoiseMask mask_;
  std::size_t erased_ = 0;
};

NoiseMask SynthesizeOne(int side, Rng& rng) {
  const double density =
      std::exp(rng.Uniform(std::log(0.001), std::log(0.6)));
  const auto total = static_cast<double>(side) * side;
  const auto target = static_cast<std::size_t>(std::ceil(density * total));
  DropoutCanvas canvas(side);
  const double scale = side * std::sqrt(density);

  while (canvas.erased() < target) {
    const double pick = rng.Uniform();
    if (pick < 0.4) {
      const double rx = 1.0 + rng.Uniform(0.05, 0.35) * scale;
      const double ry = 1.0 + rng.Uniform(0.05, 0.35) * scale;
      canvas.Ellipse(rng.Uniform(0, side), rng.Uniform(0, side), rx, ry,
                     rng.Uniform(0, 3.14159265358979));
    } else if (pick < 0.75) {
      const double angle = rng.Uniform(0, 2 * 3.14159265358979);
      const double length = side * rng.Uniform(0.1, 0.8);
      const double x0 = rng.Uniform(0, side);
      const double y0 = rng.Uniform(0, side);
      const double half = 0.5 + rng.Uniform(0.0, 1.0) * side / 64.0;
      canvas.Band(x0, y0, x0 + length * std::cos(angle),
                  y0 + length * std::sin(angle), half);
    } else {
      const double cx = rng.Uniform(0, side);
      const double cy = rng.Uniform(0, side);
      const double radius = side / 8.0;
      const int dots = 10 + static_cast<int>(rng.Index(60));
      for (int i = 0; i < dots; ++i) {
        canvas.Erase(static_cast<int>(cx + rng.Uniform(-radius, radius)),
                     static_cast<int>(cy + rng.Uniform(-radius, radius)));
      }
    }
  }
  return canvas.Take();
}

}  // namespace

PatchPool ExtractPatches(std::span<const DepthImage> frames, std::size_t count,
                         std::uint64_t seed, int side) {
  if (side <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch side must be positive");
  }
  if (frames.empty() && count > 0) {
    throw Error(ErrorCode::kInvalidArgument, "no frames to extract from");
  }
  for (const auto& f : frames) {
    f.Validate();
    if (f.width < side || f.height < side) {
      throw Error(ErrorCode::kFrameTooSmall,
                  "frame " + std::to_string(f.width) + "x" +
                      std::to_string(f.height) + " smaller than patch side " +
                      std::to_string(side));
    }
  }
  Rng rng(seed);
  std::vector<NoiseMask> masks;
  masks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const DepthImage& f = frames[rng.Index(frames.size())];
    const int ox = static_cast<int>(rng.Index(f.width - side + 1));
    const int oy = static_cast<int>(rng.Index(f.height - side + 1));
    NoiseMask m = NoiseMask::AllKeep(side);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        if (f.is_missing(ox + x, oy + y)) {
          m.bits[static_cast<std::size_t>(y) * side + x] = 0;
        }
      }
    }
    masks.push_back(std::move(m));
  }
  return BinPatches(std::move(masks));
}

PatchPool SynthesizePatches(std::size_t count, std::uint64_t seed, int side) {
  if (count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch count must be positive");
  }
  if (side <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch side must be positive");
  }
  Rng rng(seed);
  std::vector<NoiseMask> masks;
  masks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) masks.push_back(SynthesizeOne(side, rng));
  return BinPatches(std::move(masks));
}

NoiseMask ComposeMasks(const NoiseMask& a, const NoiseMask& b, ComposeOp op,
                       bool invert) {
  if (a.side != b.side || a.bits.size() != b.bits.size()) {
    throw Error(ErrorCode::kSizeMismatch, "cannot compose masks of side " +
                                              std::to_string(a.side) + " and " +
                                              std::to_string(b.side));
  }
  NoiseMask out{a.side, std::vector<std::uint8_t>(a.bits.size())};
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool da = a.bits[i] == 0;
    const bool db = b.bits[i] == 0;
    bool d = op == ComposeOp::kAdd ? (da || db) : (da && !db);
    if (invert) d = !d;
    out.bits[i] = d ? 0 : 1;
  }
  return out;
}

MaskLibrary BuildLibrary(const PatchPool& patches, std::size_t k,
                         std::uint64_t seed, MaskSource source) {
  MaskLibrary lib;
  lib.side = patches.side() > 0 ? patches.side() : kDefaultMaskSide;
  lib.groups = patches.groups;
  lib.source = source;
  lib.seed = seed;
  if (k == 0) return lib;

  const auto members = patches.Members();
  std::vector<int> non_empty;
  for (int g = 0; g < kDensityGroupCount; ++g) {
    if (!members[g].empty()) non_empty.push_back(g);
  }
  if (non_empty.size() < 2) {
    throw Error(ErrorCode::kInsufficientGroups,
                "need at least two non-empty density groups, have " +
                    std::to_string(non_empty.size()));
  }

  Rng rng(seed);
  lib.masks.reserve(k);
  lib.log.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t ia = rng.Index(non_empty.size());
    std::size_t ib = rng.Index(non_empty.size() - 1);
    if (ib >= ia) ++ib;
    CompositionRecord rec;
    rec.group_a = non_empty[ia];
    rec.group_b = non_empty[ib];
    const auto& ma = members[rec.group_a];
    const auto& mb = members[rec.group_b];
    rec.patch_a = ma[rng.Index(ma.size())];
    rec.patch_b = mb[rng.Index(mb.size())];
    rec.op = rng.Bernoulli(0.5) ? ComposeOp::kAdd : ComposeOp::kSubtract;
    rec.invert = rng.Bernoulli(0.5);
    lib.masks.push_back(ComposeMasks(patches.masks[rec.patch_a],
                                     patches.masks[rec.patch_b], rec.op,
                                     rec.invert));
    lib.log.push_back(rec);
  }
  return lib;
}

EncodedImage ApplyMask(const EncodedImage& img, const NoiseMask& mask) {
  if (img.width != mask.side || img.height != mask.side) {
    throw Error(ErrorCode::kSizeMismatch,
                "image " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + " does not match mask side " +
                    std::to_string(mask.side));
  }
  EncodedImage out = img;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0) {
      out.values[i * 3 + 0] = 0;
      out.values[i * 3 + 1] = 0;
      out.values[i * 3 + 2] = 0;
    }
  }
  return out;
}

EncodedImage ApplyNoise(const EncodedImage& img, const AugmentConfig& cfg,
                        Rng& rng, NoiseDraw* draw) {
  cfg.Validate();
  if (!cfg.library || cfg.library->masks.empty()) {
    throw Error(ErrorCode::kEmptyLibrary, "noise library is empty");
  }
  if (img.width != cfg.library->side || img.height != cfg.library->side) {
    throw Error(ErrorCode::kSizeMismatch,
                "image side does not match noise library side " +
                    std::to_string(cfg.library->side));
  }
  NoiseDraw local;
  local.applied = rng.Bernoulli(cfg.probability);
  if (local.applied) local.mask_index = rng.Index(cfg.library->masks.size());
  if (draw) *draw = local;
  if (!local.applied) return img;
  return ApplyMask(img, cfg.library->masks[local.mask_index]);
}

}  // namespace rgbdfuse
