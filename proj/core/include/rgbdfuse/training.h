#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rgbdfuse/geometry.h"
#include "rgbdfuse/image.h"
#include "rgbdfuse/nn.h"
#include "rgbdfuse/noise_aug.h"

namespace rgbdfuse {

struct LrStep {
  int iteration = 0;
  double rate = 0.01;
};

struct TrainConfig {
  // Step function; the first entry must start at iteration 0.
  std::vector<LrStep> lr_schedule{{0, 0.01}, {20000, 0.001}};
  double momentum = 0.9;
  int batch_size = 128;
  int max_iterations = 30000;
  std::uint64_t seed = 0;
  bool freeze_streams = true;

  // Throws kConfig on negative rates, unordered steps or non-positive sizes.
  void Validate() const;
};

double LearningRate(std::span<const LrStep> schedule, int iteration);

// v <- momentum v - lr g; p <- p + v. Frozen parameters are skipped.
void SgdStep(std::span<Parameter* const> params, double lr, double momentum);

void ZeroGrad(std::span<Parameter* const> params);

struct Batch {
  std::vector<Tensor> inputs;  // one N x ... tensor per modality
  std::vector<int> labels;
};

// Supplies labelled samples to the training loop. MakeBatch may draw
// augmentation randomness from the caller's generator.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::size_t size() const = 0;
  virtual Batch MakeBatch(std::span<const std::size_t> indices,
                          Rng& rng) const = 0;
};

// Plain feature vectors, no augmentation.
class TensorBatchSource final : public BatchSource {
 public:
  // `samples` is N x ..., one label per sample.
  TensorBatchSource(Tensor samples, std::vector<int> labels);

  std::size_t size() const override { return labels_.size(); }
  Batch MakeBatch(std::span<const std::size_t> indices,
                  Rng& rng) const override;

 private:
  Tensor samples_;
  std::vector<int> labels_;
};

// Image modality fed to an ImageBatchSource. Images are at the resize stage
// (side x side) and must outlive the source.
struct ImageModality {
  std::span<const EncodedImage> images;
  std::optional<AugmentConfig> noise;
};

// Turns resized images into network input. In training mode every sample
// gets the same random crop and flip across modalities; noise (when
// configured) is applied before cropping. In evaluation mode the crop is
// centered and unflipped; noise still applies, which is how corrupted test
// sets are produced.
class ImageBatchSource final : public BatchSource {
 public:
  ImageBatchSource(std::vector<ImageModality> modalities,
                   std::span<const int> labels, int crop_side, bool training);

  std::size_t size() const override { return labels_.size(); }
  Batch MakeBatch(std::span<const std::size_t> indices,
                  Rng& rng) const override;

 private:
  std::vector<ImageModality> modalities_;
  std::vector<int> labels_;
  int crop_side_;
  bool training_;
};

// Pixel bytes scaled to [-0.5, 0.5], written as channel planes.
void ImageToPlanes(const EncodedImage& img, std::span<double> out);

struct LossPoint {
  int iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
};
using LossCurve = std::vector<LossPoint>;

// Stage 1: mini-batch SGD on the stream's own softmax head.
LossCurve TrainStream(StreamNet& net, const BatchSource& data,
                      const TrainConfig& cfg);

// Stage 2: trains the fusion layers on concatenated stream features. With
// cfg.freeze_streams the stream parameters are left untouched. Throws
// kNotPretrained if a stream still has a head.
LossCurve TrainFusion(FusionNet& net, const BatchSource& data,
                      const TrainConfig& cfg);

// Evaluation-time predictions for every sample, in order. `rng` only matters
// when the source injects noise.
std::vector<Prediction> PredictStream(StreamNet& net, const BatchSource& data,
                                      Rng& rng, int batch_size = 64);
std::vector<Prediction> PredictFusion(FusionNet& net, const BatchSource& data,
                                      Rng& rng, int batch_size = 64);

// CSV "iteration,loss,lr".
void WriteLossCsv(const LossCurve& curve, const std::filesystem::path& path);

}  // namespace rgbdfuse
