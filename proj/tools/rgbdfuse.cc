// rgbdfuse command-line front end.
//
// Exit status: 0 on success, 2 for configuration or usage errors, 3 for
// data errors (unreadable, malformed or inconsistent inputs).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "rgbdfuse/checkpoint.h"
#include "rgbdfuse/dataset.h"
#include "rgbdfuse/depth_encoding.h"
#include "rgbdfuse/error.h"
#include "rgbdfuse/experiment.h"
#include "rgbdfuse/geometry.h"
#include "rgbdfuse/mask_io.h"
#include "rgbdfuse/metrics.h"
#include "rgbdfuse/noise_aug.h"
#include "rgbdfuse/png_io.h"
#include "rgbdfuse/random.h"
#include "rgbdfuse/synthetic.h"

namespace fs = std::filesystem;
using namespace rgbdfuse;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfig:
    case ErrorCode::kTooFewInstances:
    case ErrorCode::kInsufficientGroups:
    case ErrorCode::kNotPretrained:
      return kExitConfig;
    default:
      return kExitData;
  }
}

// RGBDFUSE_SEED wins over --seed.
std::uint64_t MasterSeed(std::uint64_t flag) {
  const char* env = std::getenv("RGBDFUSE_SEED");
  if (env == nullptr || *env == '\0') return flag;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used, 0);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig,
                std::string("RGBDFUSE_SEED is not an integer: ") + env);
  }
}

struct DataOptions {
  std::string manifest;
  std::string splits;
  int split_index = 0;
  int stride = 1;

  void Register(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Dataset manifest (JSON lines)")
        ->required();
    cmd->add_option("--splits", splits, "Split file written by `split`")
        ->required();
    cmd->add_option("--split-index", split_index, "Which split to use")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--stride", stride, "Keep every n-th frame")
        ->check(CLI::PositiveNumber);
  }

  Dataset Load() const { return LoadDataset(ReadManifest(manifest), stride); }

  SplitSpec Split() const {
    const auto all = ReadSplits(splits);
    if (split_index >= static_cast<int>(all.size())) {
      throw Error(ErrorCode::kConfig, "split index " + std::to_string(split_index) +
                                          " out of range (" +
                                          std::to_string(all.size()) + " splits)");
    }
    return all[static_cast<std::size_t>(split_index)];
  }
};

struct PipelineOptions {
  std::string encoding = "jet";
  std::string resize = "tile";
  int input_side = 32;
  int crop_side = 28;
  std::optional<int> stream_iters;
  std::optional<int> fusion_iters;
  std::string noise_lib;
  double noise_prob = 0.5;
  std::string test_noise_lib;
  std::uint64_t seed = 0;

  void Register(CLI::App* cmd, bool preprocessing = true) {
    if (preprocessing) {
      cmd->add_option("--encoding", encoding, "Depth encoding")
          ->check(CLI::IsMember({"jet", "gray", "normals"}));
      cmd->add_option("--resize", resize, "Resize mode")
          ->check(CLI::IsMember({"warp", "tile"}));
      cmd->add_option("--input-side", input_side, "Resize target side")
          ->check(CLI::PositiveNumber);
      cmd->add_option("--crop-side", crop_side, "Network input side")
          ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--stream-iters", stream_iters, "Stream training iterations")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--fusion-iters", fusion_iters, "Fusion training iterations")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--noise-lib", noise_lib, "Mask library for depth training");
    cmd->add_option("--noise-prob", noise_prob, "Training noise probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--test-noise-lib", test_noise_lib,
                    "Mask library applied to every depth test image");
    cmd->add_option("--seed", seed, "Master seed");
  }

  static void SetIterations(TrainConfig& tc, int iters) {
    // Keep the decay point at the same relative position.
    const double frac =
        static_cast<double>(tc.lr_schedule.back().iteration) / tc.max_iterations;
    tc.max_iterations = iters;
    tc.lr_schedule.back().iteration = static_cast<int>(frac * iters);
  }

  PipelineConfig Build() const {
    PipelineConfig cfg;
    cfg.encoding = ParseDepthEncoding(encoding);
    cfg.resize_mode = ParseResizeMode(resize);
    cfg.input_side = input_side;
    cfg.crop_side = crop_side;
    if (stream_iters) SetIterations(cfg.stream_train, *stream_iters);
    if (fusion_iters) SetIterations(cfg.fusion_train, *fusion_iters);
    if (!noise_lib.empty()) {
      cfg.train_noise = std::make_shared<MaskLibrary>(ReadMaskLibrary(noise_lib));
    }
    cfg.train_noise_probability = noise_prob;
    if (!test_noise_lib.empty()) {
      cfg.test_noise = std::make_shared<MaskLibrary>(ReadMaskLibrary(test_noise_lib));
    }
    cfg.master_seed = MasterSeed(seed);
    return cfg;
  }
};

void WriteReports(const MetricsReport& report, const std::vector<std::string>& classes,
                  const fs::path& dir, const std::string& tag) {
  fs::create_directories(dir);
  WriteMetricsCsv(report, classes, dir / ("metrics_" + tag + ".csv"));
  WriteConfusionCsv(report, dir / ("confusion_" + tag + ".csv"));
}

void PrintAccuracy(const std::string& tag, const MetricsReport& r) {
  std::printf("%s accuracy %.4f (%zu/%zu)\n", tag.c_str(), r.accuracy, r.correct(),
              r.total());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-D object recognition with depth encodings, shape-preserving "
               "resize, depth-noise augmentation and two-stream late fusion"};
  app.require_subcommand(1);
  std::function<void()> action;

  // encode
  auto* encode = app.add_subcommand("encode", "Encode a 16-bit depth PNG as RGB");
  std::string method = "jet", in, out;
  std::optional<double> fx, fy, cx, cy;
  encode->add_option("--method", method)->check(CLI::IsMember({"jet", "gray", "normals"}));
  encode->add_option("--in", in)->required();
  encode->add_option("--out", out)->required();
  encode->add_option("--fx", fx);
  encode->add_option("--fy", fy);
  encode->add_option("--cx", cx);
  encode->add_option("--cy", cy);
  encode->callback([&] {
    action = [&] {
      const DepthImage depth = ReadDepthPng(in);
      CameraIntrinsics k = CameraIntrinsics::CenteredDefault(depth.width, depth.height);
      if (fx) k.fx = *fx;
      if (fy) k.fy = *fy;
      if (cx) k.cx = *cx;
      if (cy) k.cy = *cy;
      WriteRgbPng(EncodeDepth(depth, ParseDepthEncoding(method), k), out);
    };
  });

  // resize
  auto* resize = app.add_subcommand("resize", "Resize an RGB PNG to a square");
  std::string mode = "tile";
  int side = 256;
  resize->add_option("--mode", mode)->check(CLI::IsMember({"warp", "tile"}));
  resize->add_option("--in", in)->required();
  resize->add_option("--out", out)->required();
  resize->add_option("--side", side)->check(CLI::PositiveNumber);
  resize->callback([&] {
    action = [&] {
      WriteRgbPng(Resize(ReadRgbPng(in), {ParseResizeMode(mode), side}), out);
    };
  });

  // gen-masks
  auto* gen_masks = app.add_subcommand("gen-masks", "Build a depth-noise mask library");
  std::vector<std::string> source{"synthetic"};
  std::size_t count = 33000, k = 50000;
  std::uint64_t seed = 0;
  int mask_side = kDefaultMaskSide;
  gen_masks->add_option("--source", source, "synthetic | import <dir>")
      ->expected(1, 2);
  gen_masks->add_option("--count", count, "Patches to extract or synthesize");
  gen_masks->add_option("--k", k, "Library size");
  gen_masks->add_option("--seed", seed);
  gen_masks->add_option("--side", mask_side, "Mask side")->check(CLI::PositiveNumber);
  gen_masks->add_option("--out", out)->required();
  gen_masks->callback([&] {
    action = [&] {
      const std::uint64_t master = MasterSeed(seed);
      PatchPool pool;
      MaskSource src = MaskSource::kSynthetic;
      if (source[0] == "synthetic" && source.size() == 1) {
        pool = SynthesizePatches(count, DeriveSeed(master, "masks/patches"), mask_side);
      } else if (source[0] == "import" && source.size() == 2) {
        const auto frames = ReadDepthDirectory(source[1]);
        pool = ExtractPatches(frames, count, DeriveSeed(master, "masks/patches"),
                              mask_side);
        src = MaskSource::kImported;
      } else {
        throw Error(ErrorCode::kConfig,
                    "--source expects 'synthetic' or 'import <dir>'");
      }
      const MaskLibrary lib =
          BuildLibrary(pool, k, DeriveSeed(master, "masks/library"), src);
      WriteMaskLibrary(lib, out);
      std::printf("wrote %zu masks of side %d to %s\n", lib.masks.size(), lib.side,
                  out.c_str());
    };
  });

  // augment
  auto* augment = app.add_subcommand("augment", "Apply a random library mask to a PNG");
  std::string lib_path;
  double prob = 0.5;
  augment->add_option("--lib", lib_path)->required();
  augment->add_option("--prob", prob)->check(CLI::Range(0.0, 1.0));
  augment->add_option("--in", in)->required();
  augment->add_option("--out", out)->required();
  augment->add_option("--seed", seed);
  augment->callback([&] {
    action = [&] {
      AugmentConfig cfg;
      cfg.library = std::make_shared<MaskLibrary>(ReadMaskLibrary(lib_path));
      cfg.probability = prob;
      Rng rng(DeriveSeed(MasterSeed(seed), "augment"));
      NoiseDraw draw;
      WriteRgbPng(ApplyNoise(ReadRgbPng(in), cfg, rng, &draw), out);
      if (draw.applied) {
        std::printf("applied mask %zu\n", draw.mask_index);
      } else {
        std::printf("left unchanged\n");
      }
    };
  });

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Render a synthetic RGB-D dataset");
  SyntheticSceneConfig scene;
  std::string scene_mode = "complementary";
  std::string out_dir;
  gen_data->add_option("--classes", scene.num_classes)->check(CLI::PositiveNumber);
  gen_data->add_option("--instances", scene.instances_per_class)
      ->check(CLI::PositiveNumber);
  gen_data->add_option("--frames", scene.frames_per_instance)->check(CLI::PositiveNumber);
  gen_data->add_option("--mode", scene_mode, "Which modality carries the class")
      ->check(CLI::IsMember({"complementary", "rgb-only", "depth-only", "aspect"}));
  gen_data->add_flag("--noisy-depth", scene.noisy_depth, "Add sensor dropout");
  gen_data->add_option("--seed", seed);
  gen_data->add_option("--out", out_dir)->required();
  gen_data->callback([&] {
    action = [&] {
      scene.mode = ParseInformativenessMode(scene_mode);
      scene.seed = MasterSeed(seed);
      const auto manifest = SaveDataset(GenerateSynthetic(scene), out_dir);
      std::printf("wrote %zu samples in %d classes to %s\n", manifest.entries.size(),
                  manifest.num_classes(), out_dir.c_str());
    };
  });

  // split
  auto* split = app.add_subcommand("split", "Leave-one-instance-out splits");
  std::string manifest_path;
  int n_splits = 10;
  split->add_option("--manifest", manifest_path)->required();
  split->add_option("--n", n_splits, "Number of splits")->check(CLI::PositiveNumber);
  split->add_option("--seed", seed);
  split->add_option("--out", out)->required();
  split->callback([&] {
    action = [&] {
      const auto splits =
          MakeSplits(ReadManifest(manifest_path), n_splits, MasterSeed(seed));
      WriteSplits(splits, out);
      std::printf("wrote %zu splits to %s\n", splits.size(), out.c_str());
    };
  });

  // train-stream
  auto* train_stream = app.add_subcommand("train-stream", "Train one modality stream");
  DataOptions data_opts;
  PipelineOptions pipe_opts;
  std::string modality = "rgb";
  std::string loss_csv;
  data_opts.Register(train_stream);
  pipe_opts.Register(train_stream);
  train_stream->add_option("--modality", modality)
      ->check(CLI::IsMember({"rgb", "depth"}));
  train_stream->add_option("--out", out, "Checkpoint path")->required();
  train_stream->add_option("--loss-csv", loss_csv);
  train_stream->callback([&] {
    action = [&] {
      PipelineConfig cfg = pipe_opts.Build();
      cfg.Validate();
      const Dataset ds = data_opts.Load();
      const PreparedSplit prepared = PrepareSplit(ds, data_opts.Split(), cfg);
      const bool depth = modality == "depth";
      LossCurve curve;
      StreamNet net = TrainStreamStage(prepared, depth, cfg, ds.num_classes(), &curve);
      CheckpointMeta meta = PreprocessMeta(cfg);
      meta["modality"] = modality;
      SaveCheckpoint(net, out, meta);
      if (!loss_csv.empty()) WriteLossCsv(curve, loss_csv);
      PrintAccuracy(modality, EvaluateStream(net, prepared, depth, cfg, ds.num_classes()));
    };
  });

  // train-fusion
  auto* train_fusion =
      app.add_subcommand("train-fusion", "Train fusion layers over two frozen streams");
  std::string rgb_ckpt, depth_ckpt;
  data_opts.Register(train_fusion);
  pipe_opts.Register(train_fusion, false);
  train_fusion->add_option("--rgb", rgb_ckpt, "RGB stream checkpoint")->required();
  train_fusion->add_option("--depth", depth_ckpt, "Depth stream checkpoint")->required();
  train_fusion->add_option("--out", out, "Checkpoint path")->required();
  train_fusion->add_option("--loss-csv", loss_csv);
  train_fusion->callback([&] {
    action = [&] {
      auto load_stream = [](const std::string& path, CheckpointMeta* meta) {
        LoadedCheckpoint ck = LoadCheckpoint(path);
        if (!std::holds_alternative<StreamNet>(ck.net)) {
          throw Error(ErrorCode::kConfig, path + " is not a stream checkpoint");
        }
        *meta = ck.meta;
        return std::get<StreamNet>(std::move(ck.net));
      };
      CheckpointMeta rgb_meta, depth_meta;
      StreamNet rgb = load_stream(rgb_ckpt, &rgb_meta);
      StreamNet depth = load_stream(depth_ckpt, &depth_meta);
      PipelineConfig cfg = pipe_opts.Build();
      ApplyPreprocessMeta(depth_meta, cfg);
      PipelineConfig rgb_cfg = cfg;
      ApplyPreprocessMeta(rgb_meta, rgb_cfg);
      if (rgb_cfg.resize_mode != cfg.resize_mode || rgb_cfg.input_side != cfg.input_side ||
          rgb_cfg.crop_side != cfg.crop_side) {
        throw Error(ErrorCode::kConfig, "stream checkpoints disagree on preprocessing");
      }
      cfg.Validate();
      const Dataset ds = data_opts.Load();
      const PreparedSplit prepared = PrepareSplit(ds, data_opts.Split(), cfg);
      LossCurve curve;
      FusionNet fusion = TrainFusionStage(std::move(rgb), std::move(depth), prepared,
                                          cfg, ds.num_classes(), &curve);
      CheckpointMeta meta = PreprocessMeta(cfg);
      meta["modality"] = "fusion";
      SaveCheckpoint(fusion, out, meta);
      if (!loss_csv.empty()) WriteLossCsv(curve, loss_csv);
      PrintAccuracy("fusion", EvaluateFusion(fusion, prepared, cfg, ds.num_classes()));
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split's test side");
  std::string ckpt;
  data_opts.Register(eval);
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--test-noise-lib", pipe_opts.test_noise_lib);
  eval->add_option("--seed", pipe_opts.seed);
  eval->add_option("--out-dir", out_dir, "Write metrics and confusion CSVs here");
  eval->callback([&] {
    action = [&] {
      LoadedCheckpoint ck = LoadCheckpoint(ckpt);
      PipelineConfig cfg = pipe_opts.Build();
      ApplyPreprocessMeta(ck.meta, cfg);
      const Dataset ds = data_opts.Load();
      const PreparedSplit prepared = PrepareSplit(ds, data_opts.Split(), cfg);
      MetricsReport report;
      std::string tag;
      if (auto* fusion = std::get_if<FusionNet>(&ck.net)) {
        tag = "fusion";
        report = EvaluateFusion(*fusion, prepared, cfg, ds.num_classes());
      } else {
        auto& net = std::get<StreamNet>(ck.net);
        if (!net.has_head()) {
          throw Error(ErrorCode::kConfig, ckpt + " has no classification head");
        }
        const auto it = ck.meta.find("modality");
        if (it == ck.meta.end() || (it->second != "rgb" && it->second != "depth")) {
          throw Error(ErrorCode::kFormat, ckpt + " does not record its modality");
        }
        tag = it->second;
        report = EvaluateStream(net, prepared, tag == "depth", cfg, ds.num_classes());
      }
      PrintAccuracy(tag, report);
      if (!out_dir.empty()) WriteReports(report, ds.classes, out_dir, tag);
    };
  });

  // sweep-encodings
  auto* sweep = app.add_subcommand("sweep-encodings",
                                   "Depth-only accuracy for every depth encoding");
  data_opts.Register(sweep);
  pipe_opts.Register(sweep);
  sweep->add_option("--out", out, "CSV with one row per encoding");
  sweep->callback([&] {
    action = [&] {
      const Dataset ds = data_opts.Load();
      const SplitSpec spec = data_opts.Split();
      std::string csv = "encoding,accuracy\n";
      for (auto e : {DepthEncoding::kJet, DepthEncoding::kGray, DepthEncoding::kNormals}) {
        PipelineConfig cfg = pipe_opts.Build();
        cfg.encoding = e;
        cfg.run_rgb = false;
        cfg.run_fusion = false;
        const auto result = RunExperiment(ds, spec, cfg);
        const std::string name(DepthEncodingName(e));
        PrintAccuracy(name, *result.depth);
        char line[64];
        std::snprintf(line, sizeof(line), "%s,%.6f\n", name.c_str(),
                      result.depth->accuracy);
        csv += line;
      }
      if (!out.empty()) {
        std::ofstream os(out);
        if (!(os << csv)) throw Error(ErrorCode::kIo, "cannot write " + out);
      }
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Metrics CSV and recall chart from a confusion matrix");
  std::string confusion, chart;
  report->add_option("--confusion", confusion)->required();
  report->add_option("--manifest", manifest_path, "Take class names from here");
  report->add_option("--out", out, "Metrics CSV")->required();
  report->add_option("--chart", chart, "Per-class recall bar chart (PNG)");
  report->callback([&] {
    action = [&] {
      const MetricsReport r = ReadConfusionCsv(confusion);
      std::vector<std::string> names;
      if (!manifest_path.empty()) {
        names = ReadManifest(manifest_path).classes;
      } else {
        for (std::size_t i = 0; i < r.confusion.size(); ++i) {
          names.push_back("class_" + std::to_string(i));
        }
      }
      WriteMetricsCsv(r, names, out);
      if (!chart.empty()) WriteRgbPng(RenderRecallChart(r), chart);
      PrintAccuracy("overall", r);
    };
  });

  // run-experiment
  auto* run = app.add_subcommand("run-experiment",
                                 "Both streams, fusion, metrics and checkpoints");
  data_opts.Register(run);
  pipe_opts.Register(run);
  run->add_option("--out-dir", out_dir)->required();
  run->callback([&] {
    action = [&] {
      PipelineConfig cfg = pipe_opts.Build();
      cfg.output_dir = out_dir;
      const auto result = RunExperiment(data_opts.Load(), data_opts.Split(), cfg);
      PrintAccuracy("rgb", *result.rgb);
      PrintAccuracy("depth", *result.depth);
      PrintAccuracy("fusion", *result.fusion);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    action();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
