#include "rgbdfuse/training.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

void TrainConfig::Validate() const {
  if (lr_schedule.empty() || lr_schedule.front().iteration != 0) {
    throw Error(ErrorCode::kConfig,
                "learning-rate schedule must start at iteration 0");
  }
  for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
    if (!(lr_schedule[i].rate >= 0.0)) {
      throw Error(ErrorCode::kConfig, "learning rates must be non-negative");
    }
    if (i > 0 && lr_schedule[i].iteration <= lr_schedule[i - 1].iteration) {
      throw Error(ErrorCode::kConfig,
                  "learning-rate steps must be strictly increasing");
    }
  }
  if (batch_size <= 0 || max_iterations < 0) {
    throw Error(ErrorCode::kConfig, "batch size and iterations must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::kConfig, "momentum must lie in [0, 1)");
  }
}

double LearningRate(std::span<const LrStep> schedule, int iteration) {
  double rate = schedule.empty() ? 0.0 : schedule.front().rate;
  for (const auto& step : schedule) {
    if (step.iteration <= iteration) rate = step.rate;
  }
  return rate;
}

void SgdStep(std::span<Parameter* const> params, double lr, double momentum) {
  for (Parameter* p : params) {
    if (p->frozen) continue;
    auto v = p->velocity.data();
    auto w = p->value.data();
    auto g = p->grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] - lr * g[i];
      w[i] += v[i];
    }
  }
}

void ZeroGrad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->grad.Fill(0.0);
}

TensorBatchSource::TensorBatchSource(Tensor samples, std::vector<int> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
  if (samples_.rank() < 2 || samples_.dim(0) != labels_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "samples " + ShapeString(samples_.shape()) + " vs " +
                    std::to_string(labels_.size()) + " labels");
  }
}

Batch TensorBatchSource::MakeBatch(std::span<const std::size_t> indices,
                                   Rng&) const {
  Shape shape = samples_.shape();
  const std::size_t len = samples_.size() / shape[0];
  shape[0] = indices.size();
  Tensor t(shape);
  Batch batch;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(samples_.data().begin() + indices[i] * len, len,
                t.data().begin() + i * len);
    batch.labels.push_back(labels_[indices[i]]);
  }
  batch.inputs.push_back(std::move(t));
  return batch;
}

void ImageToPlanes(const EncodedImage& img, std::span<double> out) {
  const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      out[c * plane + p] = img.values[p * 3 + c] / 255.0 - 0.5;
    }
  }
}

ImageBatchSource::ImageBatchSource(std::vector<ImageModality> modalities,
                                   std::span<const int> labels, int crop_side,
                                   bool training)
    : modalities_(std::move(modalities)),
      labels_(labels.begin(), labels.end()),
      crop_side_(crop_side),
      training_(training) {
  if (modalities_.empty()) {
    throw Error(ErrorCode::kConfig, "image source needs a modality");
  }
  for (const auto& m : modalities_) {
    if (m.images.size() != labels_.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "modality image count does not match label count");
    }
    if (m.noise) m.noise->Validate();
  }
}

Batch ImageBatchSource::MakeBatch(std::span<const std::size_t> indices,
                                  Rng& rng) const {
  const std::size_t n = indices.size();
  const auto side = static_cast<std::size_t>(crop_side_);
  Batch batch;
  for (std::size_t m = 0; m < modalities_.size(); ++m) {
    batch.inputs.emplace_back(Shape{n, 3, side, side});
  }
  const std::size_t per_sample = 3 * side * side;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = indices[i];
    const EncodedImage& first = modalities_.front().images[idx];
    const CropSpec crop =
        training_ ? RandomCrop(first.width, first.height, crop_side_, rng)
                  : CenterCrop(first.width, first.height, crop_side_);
    for (std::size_t m = 0; m < modalities_.size(); ++m) {
      const auto& mod = modalities_[m];
      const EncodedImage& src = mod.images[idx];
      EncodedImage cropped =
          mod.noise ? CropAndFlip(ApplyNoise(src, *mod.noise, rng), crop)
                    : CropAndFlip(src, crop);
      ImageToPlanes(cropped, batch.inputs[m].data().subspan(i * per_sample,
                                                            per_sample));
    }
    batch.labels.push_back(labels_[idx]);
  }
  return batch;
}

namespace {

// Epoch-wise shuffled sample order.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Shuffle();
  }

  std::vector<std::size_t> Next(std::size_t batch_size) {
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    while (out.size() < batch_size) {
      if (pos_ == order_.size()) Shuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void Shuffle() {
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng_.Index(i)]);
    }
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Rng& rng_;
};

template <typename ForwardFn, typename BackwardFn>
LossCurve RunSgd(std::vector<Parameter*> params, const BatchSource& data,
                 const TrainConfig& cfg, ForwardFn forward,
                 BackwardFn backward) {
  cfg.Validate();
  if (data.size() == 0) {
    throw Error(ErrorCode::kConfig, "training data is empty");
  }
  Rng rng(cfg.seed);
  BatchSampler sampler(data.size(), rng);
  LossCurve curve;
  curve.reserve(cfg.max_iterations);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const auto indices = sampler.Next(cfg.batch_size);
    const Batch batch = data.MakeBatch(indices, rng);
    ZeroGrad(params);
    const Tensor logits = forward(batch);
    const LossAndGrad lg = SoftmaxCrossEntropy(logits, batch.labels);
    backward(lg.grad);
    const double lr = LearningRate(cfg.lr_schedule, it);
    SgdStep(params, lr, cfg.momentum);
    curve.push_back({it, lg.loss, lr});
  }
  return curve;
}

}  // namespace

LossCurve TrainStream(StreamNet& net, const BatchSource& data,
                      const TrainConfig& cfg) {
  if (!net.has_head()) {
    throw Error(ErrorCode::kConfig, "stream training needs a softmax head");
  }
  return RunSgd(
      net.params(), data, cfg,
      [&](const Batch& b) { return net.Logits(b.inputs.at(0)); },
      [&](const Tensor& g) { net.BackwardLogits(g); });
}

LossCurve TrainFusion(FusionNet& net, const BatchSource& data,
                      const TrainConfig& cfg) {
  if (net.rgb().has_head() || net.depth().has_head()) {
    throw Error(ErrorCode::kNotPretrained, "stream still carries its head");
  }
  net.SetStreamsFrozen(cfg.freeze_streams);
  return RunSgd(
      net.params(), data, cfg,
      [&](const Batch& b) {
        if (b.inputs.size() != 2) {
          throw Error(ErrorCode::kShapeMismatch,
                      "fusion training needs paired RGB and depth inputs");
        }
        return net.Logits(b.inputs[0], b.inputs[1]);
      },
      [&](const Tensor& g) { net.Backward(g); });
}

namespace {

template <typename LogitsFn>
std::vector<Prediction> PredictAll(const BatchSource& data, Rng& rng,
                                   int batch_size, LogitsFn logits_fn) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end =
        std::min(data.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch batch = data.MakeBatch(idx, rng);
    const Tensor logits = logits_fn(batch);
    const std::size_t m = logits.dim(1);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      out.push_back(Predict(logits.data().subspan(s * m, m)));
    }
  }
  return out;
}

}  // namespace

std::vector<Prediction> PredictStream(StreamNet& net, const BatchSource& data,
                                      Rng& rng, int batch_size) {
  return PredictAll(data, rng, batch_size, [&](const Batch& b) {
    return net.Logits(b.inputs.at(0));
  });
}

std::vector<Prediction> PredictFusion(FusionNet& net, const BatchSource& data,
                                      Rng& rng, int batch_size) {
  return PredictAll(data, rng, batch_size, [&](const Batch& b) {
    return net.Logits(b.inputs.at(0), b.inputs.at(1));
  });
}

void WriteLossCsv(const LossCurve& curve, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  os << "iteration,loss,lr\n";
  char line[96];
  for (const auto& p : curve) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", p.iteration, p.loss,
                  p.lr);
    os << line;
  }
}

}  // namespace rgbdfuse
