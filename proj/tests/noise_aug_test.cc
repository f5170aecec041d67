#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "rgbdfuse/error.h"
#include "rgbdfuse/mask_io.h"
#include "rgbdfuse/noise_aug.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {
namespace {

NoiseMask MaskWithDropout(int side,
                          std::initializer_list<std::pair<int, int>> erased) {
  NoiseMask m = NoiseMask::AllKeep(side);
  for (auto [x, y] : erased) m.bits[static_cast<std::size_t>(y) * side + x] = 0;
  return m;
}

NoiseMask RandomMask(int side, double p, Rng& rng) {
  NoiseMask m = NoiseMask::AllKeep(side);
  for (auto& b : m.bits) b = rng.Bernoulli(p) ? 0 : 1;
  return m;
}

EncodedImage RandomImage(int side, Rng& rng) {
  EncodedImage img(side, side);
  for (auto& v : img.values) v = static_cast<std::uint8_t>(rng.Index(256));
  return img;
}

std::shared_ptr<const MaskLibrary> SmallLibrary(int side, std::size_t k,
                                                std::uint64_t seed) {
  return std::make_shared<MaskLibrary>(
      BuildLibrary(SynthesizePatches(200, seed, side), k, seed + 1));
}

TEST(DensityGroupsTest, Endpoints) {
  DensityGroups g;
  EXPECT_EQ(g.GroupOf(0.0), 0);
  EXPECT_EQ(g.GroupOf(1.0), 4);
  EXPECT_EQ(g.GroupOf(0.2), 0);
  EXPECT_EQ(g.GroupOf(0.21), 1);
}

TEST(DensityGroupsTest, QuintilesNearestRank) {
  std::vector<double> f;
  for (int i = 1; i <= 10; ++i) f.push_back(i / 10.0);
  const auto g = DensityGroups::FromQuintiles(f);
  EXPECT_DOUBLE_EQ(g.edges[0], 0.0);
  EXPECT_DOUBLE_EQ(g.edges[1], 0.2);
  EXPECT_DOUBLE_EQ(g.edges[2], 0.4);
  EXPECT_DOUBLE_EQ(g.edges[3], 0.6);
  EXPECT_DOUBLE_EQ(g.edges[4], 0.8);
  EXPECT_DOUBLE_EQ(g.edges[5], 1.0);
}

TEST(ExtractPatchesTest, FullyValidFrameLowestGroup) {
  std::vector<DepthImage> frames{DepthImage::FromMillimeters(
      12, 12, std::vector<float>(144, 1000.f))};
  const auto pool = ExtractPatches(frames, 10, 1, 8);
  ASSERT_EQ(pool.masks.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(pool.masks[i].ErasedCount(), 0u);
    EXPECT_EQ(pool.group[i], 0);
  }
}

TEST(ExtractPatchesTest, FullyMissingFrameHighestGroup) {
  std::vector<DepthImage> frames{
      DepthImage::FromMillimeters(10, 10, std::vector<float>(100, 0.f))};
  const auto pool = ExtractPatches(frames, 5, 2, 8);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(pool.masks[i].ErasedCount(), 64u);
    EXPECT_EQ(pool.group[i], 4);
  }
}

TEST(ExtractPatchesTest, LeftHalfMissing) {
  // 16 x 8 frame, columns 0..7 missing. A window at x offset 0 lies in the
  // hole; other offsets erase exactly the first 8 - ox columns.
  std::vector<float> mm(16 * 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 16; ++x) mm[y * 16 + x] = x < 8 ? 0.f : 900.f;
  std::vector<DepthImage> frames{DepthImage::FromMillimeters(16, 8, mm)};
  const auto pool = ExtractPatches(frames, 60, 3, 8);
  int full = 0;
  for (const auto& m : pool.masks) {
    const auto erased = m.ErasedCount();
    ASSERT_EQ(erased % 8, 0u);
    const int width = static_cast<int>(erased / 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        ASSERT_EQ(m.bits[y * 8 + x], x < width ? 0 : 1);
    full += width == 8;
  }
  EXPECT_GT(full, 0);
}

TEST(ExtractPatchesTest, FrameTooSmall) {
  std::vector<DepthImage> frames{
      DepthImage::FromMillimeters(4, 4, std::vector<float>(16, 1.f))};
  try {
    ExtractPatches(frames, 1, 0, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrameTooSmall);
  }
}

TEST(SynthesizePatchesTest, Deterministic) {
  const auto a = SynthesizePatches(5, 77, 32);
  const auto b = SynthesizePatches(5, 77, 32);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_EQ(a.group, b.group);
}

TEST(SynthesizePatchesTest, AllGroupsOccupied) {
  const auto pool = SynthesizePatches(1000, 5, 32);
  for (const auto& members : pool.Members()) EXPECT_FALSE(members.empty());
  for (const auto& m : pool.masks) {
    for (auto b : m.bits) ASSERT_TRUE(b == 0 || b == 1);
  }
}

TEST(SynthesizePatchesTest, GroupIsFunctionOfFraction) {
  const auto pool = SynthesizePatches(300, 6, 24);
  for (std::size_t i = 0; i < pool.masks.size(); ++i) {
    EXPECT_EQ(pool.groups.GroupOf(pool.masks[i].DropoutFraction()),
              pool.group[i]);
  }
}

TEST(ComposeMasksTest, AddOfKeepsIsKeep) {
  const auto k = NoiseMask::AllKeep(4);
  EXPECT_EQ(ComposeMasks(k, k, ComposeOp::kAdd, false), k);
}

TEST(ComposeMasksTest, SubtractSelfIsKeep) {
  Rng rng(4);
  const auto x = RandomMask(6, 0.3, rng);
  EXPECT_EQ(ComposeMasks(x, x, ComposeOp::kSubtract, false),
            NoiseMask::AllKeep(6));
}

TEST(ComposeMasksTest, AddUnionsDropout) {
  const auto out = ComposeMasks(MaskWithDropout(2, {{0, 0}}),
                                MaskWithDropout(2, {{1, 1}}), ComposeOp::kAdd,
                                false);
  EXPECT_EQ(out, MaskWithDropout(2, {{0, 0}, {1, 1}}));
}

TEST(ComposeMasksTest, InvertFlips) {
  const auto out = ComposeMasks(MaskWithDropout(2, {{0, 0}}),
                                NoiseMask::AllKeep(2), ComposeOp::kAdd, true);
  EXPECT_EQ(out, MaskWithDropout(2, {{1, 0}, {0, 1}, {1, 1}}));
}

TEST(ComposeMasksTest, TruthTableOnRandomMasks) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = RandomMask(9, 0.4, rng);
    const auto b = RandomMask(9, 0.4, rng);
    for (auto op : {ComposeOp::kAdd, ComposeOp::kSubtract}) {
      for (bool inv : {false, true}) {
        const auto out = ComposeMasks(a, b, op, inv);
        for (std::size_t i = 0; i < a.bits.size(); ++i) {
          const bool da = !a.bits[i], db = !b.bits[i];
          bool d = op == ComposeOp::kAdd ? (da || db) : (da && !db);
          if (inv) d = !d;
          ASSERT_EQ(out.bits[i], d ? 0 : 1);
        }
      }
    }
  }
}

TEST(ComposeMasksTest, SizeMismatch) {
  EXPECT_THROW(ComposeMasks(NoiseMask::AllKeep(2), NoiseMask::AllKeep(3),
                            ComposeOp::kAdd, false),
               Error);
}

TEST(BuildLibraryTest, EmptyWhenKZero) {
  const auto lib = BuildLibrary(SynthesizePatches(50, 1, 16), 0, 2);
  EXPECT_TRUE(lib.masks.empty());
  EXPECT_TRUE(lib.log.empty());
}

TEST(BuildLibraryTest, Deterministic) {
  const auto pool = SynthesizePatches(100, 1, 16);
  const auto a = BuildLibrary(pool, 300, 9);
  const auto b = BuildLibrary(pool, 300, 9);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_EQ(a.log, b.log);
}

TEST(BuildLibraryTest, LogMatchesMasks) {
  const auto pool = SynthesizePatches(100, 2, 16);
  const auto lib = BuildLibrary(pool, 200, 3);
  ASSERT_EQ(lib.log.size(), 200u);
  for (std::size_t i = 0; i < lib.log.size(); ++i) {
    const auto& r = lib.log[i];
    EXPECT_NE(r.group_a, r.group_b);
    EXPECT_EQ(pool.group[r.patch_a], r.group_a);
    EXPECT_EQ(pool.group[r.patch_b], r.group_b);
    EXPECT_EQ(lib.masks[i], ComposeMasks(pool.masks[r.patch_a],
                                         pool.masks[r.patch_b], r.op, r.invert));
  }
}

TEST(BuildLibraryTest, OpFrequencyBalanced) {
  const auto lib = BuildLibrary(SynthesizePatches(200, 4, 8), 10000, 5);
  const auto adds = std::count_if(lib.log.begin(), lib.log.end(), [](auto& r) {
    return r.op == ComposeOp::kAdd;
  });
  EXPECT_NEAR(adds / 10000.0, 0.5, 0.02);
}

TEST(BuildLibraryTest, InsufficientGroups) {
  std::vector<DepthImage> frames{DepthImage::FromMillimeters(
      8, 8, std::vector<float>(64, 1000.f))};
  const auto pool = ExtractPatches(frames, 10, 1, 8);
  try {
    BuildLibrary(pool, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientGroups);
  }
}

TEST(ApplyNoiseTest, ZeroProbabilityIsIdentity) {
  Rng rng(1);
  AugmentConfig cfg;
  cfg.probability = 0.0;
  cfg.library = SmallLibrary(16, 20, 1);
  const auto img = RandomImage(16, rng);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(ApplyNoise(img, cfg, rng), img);
}

TEST(ApplyNoiseTest, AllKeepMaskIsIdentity) {
  Rng rng(2);
  auto lib = std::make_shared<MaskLibrary>();
  lib->side = 8;
  lib->masks = {NoiseMask::AllKeep(8)};
  AugmentConfig cfg;
  cfg.probability = 1.0;
  cfg.library = lib;
  const auto img = RandomImage(8, rng);
  EXPECT_EQ(ApplyNoise(img, cfg, rng), img);
}

TEST(ApplyNoiseTest, OnlyRemovesInformation) {
  Rng rng(3);
  AugmentConfig cfg;
  cfg.probability = 1.0;
  cfg.library = SmallLibrary(16, 50, 3);
  for (int i = 0; i < 30; ++i) {
    auto img = RandomImage(16, rng);
    for (std::size_t p = 0; p < img.values.size(); p += 7) img.values[p] = 0;
    NoiseDraw draw;
    const auto out = ApplyNoise(img, cfg, rng, &draw);
    ASSERT_TRUE(draw.applied);
    const auto& mask = cfg.library->masks[draw.mask_index];
    for (std::size_t p = 0; p < img.values.size(); ++p) {
      if (img.values[p] == 0) ASSERT_EQ(out.values[p], 0);
      const bool erased = mask.bits[p / 3] == 0;
      ASSERT_EQ(out.values[p], erased ? 0 : img.values[p]);
    }
  }
}

TEST(ApplyNoiseTest, NoisedFractionNearHalf) {
  Rng rng(4);
  AugmentConfig cfg;
  cfg.library = SmallLibrary(8, 10, 4);
  EncodedImage img(8, 8);
  int applied = 0;
  for (int i = 0; i < 10000; ++i) {
    NoiseDraw d;
    ApplyNoise(img, cfg, rng, &d);
    applied += d.applied;
  }
  // 3 sigma of Binomial(10000, 0.5) is 150.
  EXPECT_NEAR(applied, 5000, 150);
}

TEST(ApplyNoiseTest, Errors) {
  Rng rng(5);
  AugmentConfig cfg;
  cfg.probability = 1.0;
  cfg.library = std::make_shared<MaskLibrary>();
  EncodedImage img(8, 8);
  try {
    ApplyNoise(img, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyLibrary);
  }
  cfg.library = SmallLibrary(16, 5, 5);
  try {
    ApplyNoise(img, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSizeMismatch);
  }
  cfg.probability = 1.5;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(RunLengthTest, RoundTrip) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = RandomMask(10, rng.Uniform(), rng);
    const auto runs = EncodeRuns(m.bits);
    EXPECT_EQ(DecodeRuns(runs, m.bits.size()), m.bits);
  }
}

TEST(RunLengthTest, StartsWithKeepRun) {
  const std::vector<std::uint8_t> bits{0, 0, 1, 1, 1, 0};
  EXPECT_EQ(EncodeRuns(bits), (std::vector<std::uint32_t>{0, 2, 3, 1}));
  EXPECT_THROW(DecodeRuns(std::vector<std::uint32_t>{2, 2}, 5), Error);
}

TEST(MaskFileTest, RoundTripWithSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "rgbdfuse_mask_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "lib.mask";
  const auto lib = BuildLibrary(SynthesizePatches(60, 7, 16), 40, 8);
  WriteMaskLibrary(lib, path);
  EXPECT_TRUE(std::filesystem::exists(SidecarPath(path)));
  const auto back = ReadMaskLibrary(path);
  EXPECT_EQ(back.side, lib.side);
  EXPECT_EQ(back.seed, lib.seed);
  EXPECT_EQ(back.masks, lib.masks);
  EXPECT_EQ(back.log, lib.log);
  EXPECT_EQ(back.groups.edges, lib.groups.edges);
  EXPECT_EQ(back.source, lib.source);
  std::filesystem::remove_all(dir);
}

TEST(MaskFileTest, RejectsBadMagic) {
  const auto path = std::filesystem::temp_directory_path() / "rgbdfuse_bad.mask";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOTAMASKFILE....", f);
    std::fclose(f);
  }
  try {
    ReadMaskLibrary(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rgbdfuse
