#include "rgbdfuse/experiment.h"

#include <string>
#include <utility>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

TrainConfig PipelineConfig::DefaultStreamTraining() {
  TrainConfig t;
  t.lr_schedule = {{0, 0.01}, {400, 0.001}};
  t.momentum = 0.9;
  t.batch_size = 32;
  t.max_iterations = 600;
  t.freeze_streams = false;
  return t;
}

TrainConfig PipelineConfig::DefaultFusionTraining() {
  TrainConfig t;
  t.lr_schedule = {{0, 0.01}, {200, 0.001}};
  t.momentum = 0.9;
  t.batch_size = 50;
  t.max_iterations = 300;
  t.freeze_streams = true;
  return t;
}

void PipelineConfig::Validate() const {
  if (input_side <= 0 || crop_side <= 0 || crop_side > input_side) {
    throw Error(ErrorCode::kConfig,
                "crop side must be positive and no larger than the input side");
  }
  if (run_fusion && !(run_rgb && run_depth)) {
    throw Error(ErrorCode::kConfig, "fusion needs both streams");
  }
  if (run_fusion && fusion_widths.empty()) {
    throw Error(ErrorCode::kConfig,
                "fusion network needs at least one fully connected layer");
  }
  for (const auto& lib : {train_noise, test_noise}) {
    if (lib && lib->side != input_side) {
      throw Error(ErrorCode::kConfig,
                  "noise library side " + std::to_string(lib->side) +
                      " does not match input side " +
                      std::to_string(input_side));
    }
  }
  stream_train.Validate();
  fusion_train.Validate();
}

CheckpointMeta PreprocessMeta(const PipelineConfig& cfg) {
  return {{"encoding", std::string(DepthEncodingName(cfg.encoding))},
          {"resize", std::string(ResizeModeName(cfg.resize_mode))},
          {"input_side", std::to_string(cfg.input_side)},
          {"crop_side", std::to_string(cfg.crop_side)}};
}

void ApplyPreprocessMeta(const CheckpointMeta& meta, PipelineConfig& cfg) {
  if (auto it = meta.find("encoding"); it != meta.end()) {
    cfg.encoding = ParseDepthEncoding(it->second);
  }
  if (auto it = meta.find("resize"); it != meta.end()) {
    cfg.resize_mode = ParseResizeMode(it->second);
  }
  if (auto it = meta.find("input_side"); it != meta.end()) {
    cfg.input_side = std::stoi(it->second);
  }
  if (auto it = meta.find("crop_side"); it != meta.end()) {
    cfg.crop_side = std::stoi(it->second);
  }
}

EncodedImage PreprocessRgb(const EncodedImage& rgb, const PipelineConfig& cfg) {
  return Resize(rgb, {cfg.resize_mode, cfg.input_side});
}

EncodedImage PreprocessDepth(const DepthImage& depth,
                             const PipelineConfig& cfg) {
  const EncodedImage encoded = EncodeDepth(
      depth, cfg.encoding,
      CameraIntrinsics::CenteredDefault(depth.width, depth.height));
  return Resize(encoded, {cfg.resize_mode, cfg.input_side});
}

PreparedSplit PrepareSplit(const Dataset& data, const SplitSpec& split,
                           const PipelineConfig& cfg) {
  if (static_cast<int>(split.held_out.size()) != data.num_classes()) {
    throw Error(ErrorCode::kConfig, "split does not cover every class");
  }
  PreparedSplit p;
  for (const Sample& s : data.samples) {
    const bool test = split.IsTest(s.class_id, s.instance_id);
    (test ? p.test_rgb : p.train_rgb).push_back(PreprocessRgb(s.rgb, cfg));
    (test ? p.test_depth : p.train_depth)
        .push_back(PreprocessDepth(s.depth, cfg));
    (test ? p.test_labels : p.train_labels).push_back(s.class_id);
  }
  if (p.train_labels.empty()) {
    throw Error(ErrorCode::kConfig, "split leaves no training samples");
  }
  if (p.test_labels.empty()) {
    throw Error(ErrorCode::kEmptyTestSet, "split leaves no test samples");
  }
  return p;
}

namespace {

std::optional<AugmentConfig> NoiseConfig(
    const std::shared_ptr<const MaskLibrary>& lib, double probability) {
  if (!lib) return std::nullopt;
  AugmentConfig a;
  a.library = lib;
  a.probability = probability;
  return a;
}

MetricsReport ToReport(const std::vector<Prediction>& preds,
                       const std::vector<int>& labels, int num_classes) {
  std::vector<int> predicted;
  predicted.reserve(preds.size());
  for (const auto& p : preds) predicted.push_back(p.label);
  return ComputeMetrics(labels, predicted, num_classes);
}

void WriteReport(const MetricsReport& r, const Dataset& data,
                 const std::filesystem::path& dir, const std::string& tag) {
  WriteMetricsCsv(r, data.classes, dir / ("metrics_" + tag + ".csv"));
  WriteConfusionCsv(r, dir / ("confusion_" + tag + ".csv"));
}

}  // namespace

MetricsReport EvaluateStream(StreamNet& net, const PreparedSplit& prepared,
                             bool depth_modality, const PipelineConfig& cfg,
                             int num_classes) {
  ImageModality mod;
  mod.images = depth_modality ? std::span<const EncodedImage>(prepared.test_depth)
                              : std::span<const EncodedImage>(prepared.test_rgb);
  if (depth_modality) {
    mod.noise = NoiseConfig(cfg.test_noise, cfg.test_noise_probability);
  }
  ImageBatchSource source({mod}, prepared.test_labels, cfg.crop_side, false);
  Rng rng(DeriveSeed(cfg.master_seed, "eval/noise"));
  return ToReport(PredictStream(net, source, rng), prepared.test_labels,
                  num_classes);
}

MetricsReport EvaluateFusion(FusionNet& net, const PreparedSplit& prepared,
                             const PipelineConfig& cfg, int num_classes) {
  ImageModality rgb{prepared.test_rgb, std::nullopt};
  ImageModality depth{prepared.test_depth,
                      NoiseConfig(cfg.test_noise, cfg.test_noise_probability)};
  ImageBatchSource source({rgb, depth}, prepared.test_labels, cfg.crop_side,
                          false);
  Rng rng(DeriveSeed(cfg.master_seed, "eval/noise"));
  return ToReport(PredictFusion(net, source, rng), prepared.test_labels,
                  num_classes);
}

StreamNet TrainStreamStage(const PreparedSplit& prepared, bool depth_modality,
                           const PipelineConfig& cfg, int num_classes,
                           LossCurve* curve) {
  const std::string tag = depth_modality ? "depth" : "rgb";
  const auto arch = StreamArchitecture::Toy(cfg.crop_side, cfg.feature_dim);
  StreamNet net(arch, num_classes, DeriveSeed(cfg.master_seed, tag + "/init"));
  ImageModality mod;
  mod.images = depth_modality
                   ? std::span<const EncodedImage>(prepared.train_depth)
                   : std::span<const EncodedImage>(prepared.train_rgb);
  if (depth_modality) {
    mod.noise = NoiseConfig(cfg.train_noise, cfg.train_noise_probability);
  }
  ImageBatchSource source({mod}, prepared.train_labels, cfg.crop_side, true);
  TrainConfig tc = cfg.stream_train;
  tc.seed = DeriveSeed(cfg.master_seed, tag + "/train");
  LossCurve c = TrainStream(net, source, tc);
  if (curve) *curve = std::move(c);
  return net;
}

FusionNet TrainFusionStage(StreamNet rgb, StreamNet depth,
                           const PreparedSplit& prepared,
                           const PipelineConfig& cfg, int num_classes,
                           LossCurve* curve) {
  if (rgb.has_head()) rgb.DiscardHead();
  if (depth.has_head()) depth.DiscardHead();
  FusionArchitecture fa;
  fa.fusion_widths = cfg.fusion_widths;
  fa.num_classes = num_classes;
  FusionNet fusion(std::move(rgb), std::move(depth), fa,
                   DeriveSeed(cfg.master_seed, "fusion/init"));
  ImageModality rgb_mod{prepared.train_rgb, std::nullopt};
  ImageModality depth_mod{prepared.train_depth,
                          NoiseConfig(cfg.train_noise, cfg.train_noise_probability)};
  ImageBatchSource source({rgb_mod, depth_mod}, prepared.train_labels,
                          cfg.crop_side, true);
  TrainConfig tc = cfg.fusion_train;
  tc.seed = DeriveSeed(cfg.master_seed, "fusion/train");
  LossCurve c = TrainFusion(fusion, source, tc);
  if (curve) *curve = std::move(c);
  return fusion;
}

ExperimentResult RunExperiment(const Dataset& data, const SplitSpec& split,
                               const PipelineConfig& cfg) {
  cfg.Validate();
  const int m = data.num_classes();
  const PreparedSplit prepared = PrepareSplit(data, split, cfg);
  if (cfg.output_dir) std::filesystem::create_directories(*cfg.output_dir);
  const CheckpointMeta meta = PreprocessMeta(cfg);

  ExperimentResult result;
  auto train_one = [&](bool depth_modality) {
    const std::string tag = depth_modality ? "depth" : "rgb";
    LossCurve curve;
    StreamNet net = TrainStreamStage(prepared, depth_modality, cfg, m, &curve);
    MetricsReport report =
        EvaluateStream(net, prepared, depth_modality, cfg, m);
    if (cfg.output_dir) {
      WriteLossCsv(curve, *cfg.output_dir / ("loss_" + tag + ".csv"));
      WriteReport(report, data, *cfg.output_dir, tag);
      CheckpointMeta stream_meta = meta;
      stream_meta["modality"] = tag;
      SaveCheckpoint(net, *cfg.output_dir / (tag + ".ckpt"), stream_meta);
    }
    (depth_modality ? result.depth : result.rgb) = std::move(report);
    (depth_modality ? result.depth_curve : result.rgb_curve) = std::move(curve);
    (depth_modality ? result.depth_net : result.rgb_net) = std::move(net);
  };

  if (cfg.run_rgb) train_one(false);
  if (cfg.run_depth) train_one(true);

  if (cfg.run_fusion) {
    FusionNet fusion = TrainFusionStage(*result.rgb_net, *result.depth_net,
                                        prepared, cfg, m, &result.fusion_curve);
    result.fusion = EvaluateFusion(fusion, prepared, cfg, m);
    if (cfg.output_dir) {
      WriteLossCsv(result.fusion_curve, *cfg.output_dir / "loss_fusion.csv");
      WriteReport(*result.fusion, data, *cfg.output_dir, "fusion");
      CheckpointMeta fusion_meta = meta;
      fusion_meta["modality"] = "fusion";
      SaveCheckpoint(fusion, *cfg.output_dir / "fusion.ckpt", fusion_meta);
    }
    result.fusion_net = std::move(fusion);
  }
  return result;
}

}  // namespace rgbdfuse
