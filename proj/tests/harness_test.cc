#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rgbdfuse/dataset.h"
#include "rgbdfuse/error.h"
#include "rgbdfuse/experiment.h"
#include "rgbdfuse/metrics.h"
#include "rgbdfuse/png_io.h"
#include "rgbdfuse/synthetic.h"

namespace rgbdfuse {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rgbdfuse_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

SyntheticSceneConfig SmallScene(InformativenessMode mode, std::uint64_t seed) {
  SyntheticSceneConfig cfg;
  cfg.num_classes = 4;
  cfg.instances_per_class = 2;
  cfg.frames_per_instance = 3;
  cfg.side = 24;
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

TEST(PngTest, DepthRoundTrip) {
  const auto dir = TempDir("png");
  const auto d = DepthImage::FromMillimeters(3, 2, {0, 1, 65535, 1200, 800, 0});
  WriteDepthPng(d, dir / "d.png");
  const auto back = ReadDepthPng(dir / "d.png");
  EXPECT_EQ(back.values, d.values);
  EXPECT_EQ(back.missing, d.missing);
  EncodedImage rgb(2, 2);
  for (std::size_t i = 0; i < rgb.values.size(); ++i) rgb.values[i] = static_cast<std::uint8_t>(i * 20);
  WriteRgbPng(rgb, dir / "c.png");
  EXPECT_EQ(ReadRgbPng(dir / "c.png"), rgb);
  EXPECT_THROW(ReadRgbPng(dir / "missing.png"), Error);
  fs::remove_all(dir);
}

TEST(SyntheticTest, Deterministic) {
  const auto cfg = SmallScene(InformativenessMode::kComplementary, 3);
  const auto a = GenerateSynthetic(cfg);
  const auto b = GenerateSynthetic(cfg);
  ASSERT_EQ(a.samples.size(), 4u * 2u * 3u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].rgb, b.samples[i].rgb);
    EXPECT_EQ(a.samples[i].depth.values, b.samples[i].depth.values);
    EXPECT_EQ(a.samples[i].instance_id, b.samples[i].instance_id);
  }
}

TEST(SyntheticTest, InstancesBelongToOneClass) {
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kDepthOnly, 1));
  std::map<int, int> owner;
  for (const auto& s : ds.samples) {
    auto [it, inserted] = owner.emplace(s.instance_id, s.class_id);
    EXPECT_EQ(it->second, s.class_id);
  }
  EXPECT_EQ(owner.size(), 8u);
}

TEST(SyntheticTest, ModeCodes) {
  auto cfg = SmallScene(InformativenessMode::kDepthOnly, 0);
  cfg.num_classes = 2;
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(ClassCodeFor(cfg, c).texture, -1);
    EXPECT_EQ(ClassCodeFor(cfg, c).profile, c);
  }
  cfg.mode = InformativenessMode::kRgbOnly;
  for (int c = 0; c < 2; ++c) EXPECT_EQ(ClassCodeFor(cfg, c).profile, -1);
}

TEST(SyntheticTest, ComplementaryNeedsBothModalities) {
  const auto cfg = SmallScene(InformativenessMode::kComplementary, 0);
  std::set<int> profiles, textures;
  std::set<std::pair<int, int>> pairs;
  for (int c = 0; c < cfg.num_classes; ++c) {
    const auto code = ClassCodeFor(cfg, c);
    profiles.insert(code.profile);
    textures.insert(code.texture);
    pairs.insert({code.profile, code.texture});
  }
  // Each single cue takes fewer values than there are classes, the pair
  // identifies every class.
  EXPECT_LT(profiles.size(), 4u);
  EXPECT_LT(textures.size(), 4u);
  EXPECT_EQ(pairs.size(), 4u);
}

TEST(SyntheticTest, AspectModeChangesShape) {
  auto cfg = SmallScene(InformativenessMode::kAspectOnly, 2);
  const auto ds = GenerateSynthetic(cfg);
  EXPECT_LT(ds.samples.front().rgb.width, ds.samples.front().rgb.height);
  EXPECT_GT(ds.samples.back().rgb.width, ds.samples.back().rgb.height);
  EXPECT_EQ(ds.samples.back().depth.width, ds.samples.back().rgb.width);
}

TEST(SyntheticTest, InvalidConfig) {
  auto cfg = SmallScene(InformativenessMode::kComplementary, 0);
  cfg.num_classes = 3;
  EXPECT_THROW(GenerateSynthetic(cfg), Error);
  cfg.num_classes = 4;
  cfg.instances_per_class = 1;
  EXPECT_THROW(GenerateSynthetic(cfg), Error);
}

TEST(DatasetTest, SaveLoadRoundTrip) {
  const auto dir = TempDir("dataset");
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kRgbOnly, 4));
  SaveDataset(ds, dir);
  const auto manifest = ReadManifest(dir / "manifest.jsonl");
  EXPECT_NO_THROW(manifest.Validate(true));
  EXPECT_EQ(manifest.classes, ds.classes);
  const auto back = LoadDataset(manifest);
  ASSERT_EQ(back.samples.size(), ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].rgb, ds.samples[i].rgb);
    EXPECT_EQ(back.samples[i].depth.values, ds.samples[i].depth.values);
    EXPECT_EQ(back.samples[i].class_id, ds.samples[i].class_id);
  }
  const auto strided = LoadDataset(manifest, 2);
  EXPECT_EQ(strided.samples.size(), 8u * 2u);
  fs::remove_all(dir);
}

TEST(DatasetTest, ManifestValidation) {
  DatasetManifest m;
  m.classes = {"a", "b"};
  m.entries = {{"x.png", "y.png", 0, 1}, {"x.png", "y.png", 1, 1}};
  EXPECT_THROW(m.Validate(false), Error);
  m.entries = {{"x.png", "y.png", 2, 1}};
  EXPECT_THROW(m.Validate(false), Error);
  m.entries = {{"x.png", "y.png", 1, 1}};
  EXPECT_NO_THROW(m.Validate(false));
  m.root = TempDir("manifest");
  EXPECT_THROW(m.Validate(true), Error);
  fs::remove_all(m.root);
}

TEST(SplitsTest, TwoInstancesBothLeaveOuts) {
  std::vector<InstanceKey> items;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 2; ++i) items.push_back({c, 10 * c + i});
  const auto splits = MakeSplits(items, 3, 2, 5);
  ASSERT_EQ(splits.size(), 2u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NE(splits[0].held_out[c], splits[1].held_out[c]);
  }
}

TEST(SplitsTest, DisjointAndCovering) {
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kDepthOnly, 5));
  for (const auto& split : MakeSplits(ds, 3, 6)) {
    std::set<int> train, test;
    for (const auto& s : ds.samples) {
      (split.IsTest(s.class_id, s.instance_id) ? test : train).insert(s.instance_id);
    }
    for (int id : test) EXPECT_EQ(train.count(id), 0u);
    EXPECT_EQ(test.size(), 4u);
    EXPECT_EQ(train.size() + test.size(), 8u);
  }
}

TEST(SplitsTest, DeterministicAndPersisted) {
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kDepthOnly, 5));
  const auto a = MakeSplits(ds, 4, 7);
  EXPECT_EQ(a, MakeSplits(ds, 4, 7));
  const auto dir = TempDir("splits");
  WriteSplits(a, dir / "splits.json");
  EXPECT_EQ(ReadSplits(dir / "splits.json"), a);
  fs::remove_all(dir);
}

TEST(SplitsTest, TooFewInstances) {
  std::vector<InstanceKey> items{{0, 0}, {0, 1}, {1, 2}};
  try {
    MakeSplits(items, 2, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewInstances);
  }
}

TEST(MetricsTest, PerfectPredictor) {
  const std::vector<int> t{0, 1, 2, 1};
  const auto r = ComputeMetrics(t, t, 3);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  for (const auto& rec : r.per_class_recall) EXPECT_DOUBLE_EQ(*rec, 1.0);
}

TEST(MetricsTest, ConstantPredictor) {
  const std::vector<int> t{0, 0, 1, 1}, p{0, 0, 0, 0};
  const auto r = ComputeMetrics(t, p, 2);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class_recall[0], 1.0);
  EXPECT_DOUBLE_EQ(*r.per_class_recall[1], 0.0);
}

TEST(MetricsTest, ThreeClassConfusion) {
  const auto r = MetricsFromConfusion({{5, 0, 0}, {1, 3, 1}, {0, 0, 5}});
  EXPECT_DOUBLE_EQ(*r.per_class_recall[0], 1.0);
  EXPECT_DOUBLE_EQ(*r.per_class_recall[1], 0.6);
  EXPECT_DOUBLE_EQ(*r.per_class_recall[2], 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 13.0 / 15.0);
  EXPECT_EQ(r.total(), 15u);
}

TEST(MetricsTest, UndefinedRecallAndErrors) {
  const std::vector<int> t{0, 0}, p{0, 1};
  const auto r = ComputeMetrics(t, p, 3);
  EXPECT_FALSE(r.per_class_recall[1].has_value());
  EXPECT_FALSE(r.per_class_recall[2].has_value());
  EXPECT_THROW(ComputeMetrics(std::vector<int>{}, std::vector<int>{}, 2), Error);
  EXPECT_THROW(ComputeMetrics(t, std::vector<int>{0}, 2), Error);
}

TEST(MetricsTest, BalancedAccuracyEqualsMeanRecall) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t, p;
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 6; ++i) {
        t.push_back(c);
        p.push_back(static_cast<int>(rng.Index(4)));
      }
    const auto r = ComputeMetrics(t, p, 4);
    double mean = 0.0;
    for (const auto& rec : r.per_class_recall) mean += *rec / 4.0;
    EXPECT_NEAR(r.accuracy, mean, 1e-12);
    EXPECT_EQ(r.total(), t.size());
  }
}

TEST(MetricsTest, CsvFiles) {
  const auto dir = TempDir("metrics");
  const auto r = MetricsFromConfusion({{2, 0}, {0, 0}});
  WriteMetricsCsv(r, std::vector<std::string>{"mug", "bowl"}, dir / "m.csv");
  EXPECT_EQ(ReadFile(dir / "m.csv"),
            "class,name,support,correct,recall\n"
            "0,mug,2,2,1.000000\n"
            "1,bowl,0,0,undefined\n"
            "overall,,2,2,1.000000\n");
  WriteConfusionCsv(r, dir / "c.csv");
  EXPECT_EQ(ReadConfusionCsv(dir / "c.csv").confusion, r.confusion);
  const auto chart = RenderRecallChart(r);
  EXPECT_GT(chart.width, 0);
  fs::remove_all(dir);
}

TEST(ExperimentTest, PreprocessMetaRoundTrip) {
  PipelineConfig cfg;
  cfg.encoding = DepthEncoding::kNormals;
  cfg.resize_mode = ResizeMode::kWarp;
  cfg.input_side = 40;
  cfg.crop_side = 36;
  PipelineConfig back;
  ApplyPreprocessMeta(PreprocessMeta(cfg), back);
  EXPECT_EQ(back.encoding, cfg.encoding);
  EXPECT_EQ(back.resize_mode, cfg.resize_mode);
  EXPECT_EQ(back.input_side, 40);
  EXPECT_EQ(back.crop_side, 36);
}

TEST(ExperimentTest, ConfigValidation) {
  PipelineConfig cfg;
  cfg.crop_side = cfg.input_side + 1;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = PipelineConfig{};
  cfg.run_rgb = false;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = PipelineConfig{};
  cfg.fusion_widths.clear();
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(ExperimentTest, PrepareSplitSeparatesInstances) {
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kDepthOnly, 8));
  const auto split = MakeSplits(ds, 1, 1).front();
  PipelineConfig cfg;
  const auto p = PrepareSplit(ds, split, cfg);
  EXPECT_EQ(p.test_labels.size(), 4u * 3u);
  EXPECT_EQ(p.train_labels.size(), 4u * 3u);
  EXPECT_EQ(p.train_rgb.front().width, cfg.input_side);
  EXPECT_EQ(p.test_depth.front().height, cfg.input_side);
}

TEST(ExperimentTest, SmallRunWritesArtifacts) {
  const auto dir = TempDir("experiment");
  const auto ds = GenerateSynthetic(SmallScene(InformativenessMode::kComplementary, 9));
  const auto split = MakeSplits(ds, 1, 2).front();
  PipelineConfig cfg;
  cfg.stream_train.max_iterations = 20;
  cfg.fusion_train.max_iterations = 20;
  cfg.output_dir = dir;
  const auto r = RunExperiment(ds, split, cfg);
  ASSERT_TRUE(r.fusion.has_value());
  EXPECT_EQ(r.fusion->total(), 12u);
  for (const char* f : {"metrics_rgb.csv", "metrics_depth.csv", "metrics_fusion.csv",
                        "confusion_fusion.csv", "loss_rgb.csv", "loss_depth.csv",
                        "loss_fusion.csv", "rgb.ckpt", "depth.ckpt", "fusion.ckpt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(LoadCheckpoint(dir / "fusion.ckpt").meta.at("resize"), "tile");
  fs::remove_all(dir);
}

TEST(ExperimentTest, EncodingSweepOnDepthOnlyTask) {
  SyntheticSceneConfig scene;
  scene.num_classes = 3;
  scene.instances_per_class = 3;
  scene.mode = InformativenessMode::kDepthOnly;
  scene.seed = 21;
  const auto ds = GenerateSynthetic(scene);
  const auto split = MakeSplits(ds, 1, 3).front();
  for (auto enc : {DepthEncoding::kJet, DepthEncoding::kGray}) {
    PipelineConfig cfg;
    cfg.encoding = enc;
    cfg.run_rgb = false;
    cfg.run_fusion = false;
    cfg.master_seed = 4;
    const auto r = RunExperiment(ds, split, cfg);
    EXPECT_DOUBLE_EQ(r.depth->accuracy, 1.0) << DepthEncodingName(enc);
  }
}

}  // namespace
}  // namespace rgbdfuse
