#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "rgbdfuse/checkpoint.h"
#include "rgbdfuse/dataset.h"
#include "rgbdfuse/depth_encoding.h"
#include "rgbdfuse/geometry.h"
#include "rgbdfuse/metrics.h"
#include "rgbdfuse/nn.h"
#include "rgbdfuse/noise_aug.h"
#include "rgbdfuse/training.h"

namespace rgbdfuse {

struct PipelineConfig {
  DepthEncoding encoding = DepthEncoding::kJet;
  ResizeMode resize_mode = ResizeMode::kTileBorders;
  int input_side = 32;  // resize target, the 256 analog
  int crop_side = 28;   // network input, the 227 analog
  int feature_dim = 64;
  std::vector<int> fusion_widths{64};

  TrainConfig stream_train = DefaultStreamTraining();
  TrainConfig fusion_train = DefaultFusionTraining();

  // Depth-stream noise augmentation during stage 1 (and stage 2).
  std::shared_ptr<const MaskLibrary> train_noise;
  double train_noise_probability = 0.5;
  // Corruption applied to test depth images.
  std::shared_ptr<const MaskLibrary> test_noise;
  double test_noise_probability = 1.0;

  bool run_rgb = true;
  bool run_depth = true;
  bool run_fusion = true;

  std::uint64_t master_seed = 0;
  // Where CSVs and checkpoints go; nothing is written when unset.
  std::optional<std::filesystem::path> output_dir;

  static TrainConfig DefaultStreamTraining();
  static TrainConfig DefaultFusionTraining();

  void Validate() const;
};

// Resize policy, encoding and crop recorded in checkpoints so `eval` can
// reproduce the preprocessing.
CheckpointMeta PreprocessMeta(const PipelineConfig& cfg);
void ApplyPreprocessMeta(const CheckpointMeta& meta, PipelineConfig& cfg);

EncodedImage PreprocessRgb(const EncodedImage& rgb, const PipelineConfig& cfg);
EncodedImage PreprocessDepth(const DepthImage& depth, const PipelineConfig& cfg);

struct PreparedSplit {
  std::vector<EncodedImage> train_rgb, train_depth, test_rgb, test_depth;
  std::vector<int> train_labels, test_labels;
};

PreparedSplit PrepareSplit(const Dataset& data, const SplitSpec& split,
                           const PipelineConfig& cfg);

struct ExperimentResult {
  std::optional<MetricsReport> rgb;
  std::optional<MetricsReport> depth;
  std::optional<MetricsReport> fusion;
  LossCurve rgb_curve, depth_curve, fusion_curve;
  std::optional<StreamNet> rgb_net, depth_net;  // with stage-1 heads
  std::optional<FusionNet> fusion_net;
};

// encode -> resize -> stage-1 stream training -> stage-2 fusion training
// (streams frozen per cfg.fusion_train) -> evaluation on held-out instances.
// Every random stream is derived from cfg.master_seed. When output_dir is set
// writes metrics_*.csv, confusion_*.csv, loss_*.csv and *.ckpt there.
// Stage 1: one modality's stream, with its classification head.
StreamNet TrainStreamStage(const PreparedSplit& prepared, bool depth_modality,
                           const PipelineConfig& cfg, int num_classes,
                           LossCurve* curve = nullptr);
// Stage 2: heads are dropped, streams frozen, fusion layers trained.
FusionNet TrainFusionStage(StreamNet rgb, StreamNet depth,
                           const PreparedSplit& prepared,
                           const PipelineConfig& cfg, int num_classes,
                           LossCurve* curve = nullptr);

ExperimentResult RunExperiment(const Dataset& data, const SplitSpec& split,
                               const PipelineConfig& cfg);

// Evaluation of trained networks on the prepared test set.
MetricsReport EvaluateStream(StreamNet& net, const PreparedSplit& prepared,
                             bool depth_modality, const PipelineConfig& cfg,
                             int num_classes);
MetricsReport EvaluateFusion(FusionNet& net, const PreparedSplit& prepared,
                             const PipelineConfig& cfg, int num_classes);

}  // namespace rgbdfuse
