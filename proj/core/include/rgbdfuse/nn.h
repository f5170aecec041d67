#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgbdfuse/random.h"
#include "rgbdfuse/tensor.h"

namespace rgbdfuse {

struct LayerSpec {
  enum class Kind { kConv, kMaxPool, kReLU, kFullyConnected, kSoftmax };

  Kind kind = Kind::kReLU;
  int out = 0;  // output channels (conv) or output dimension (fc)
  int kernel = 0;
  int stride = 1;
  int pad = 0;

  static LayerSpec Conv(int out_channels, int kernel, int stride = 1,
                        int pad = 0);
  static LayerSpec MaxPool(int kernel, int stride);
  static LayerSpec ReLU();
  static LayerSpec FullyConnected(int out_dim);
  static LayerSpec Softmax();

  std::string ToString() const;
  // Inverse of ToString, e.g. "conv(8,5,2,0)", "maxpool(2,2)", "fc(64)".
  static LayerSpec Parse(const std::string& text);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;
  bool frozen = false;

  explicit Parameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(shape), velocity(shape) {}
};

// One differentiable stage. Forward caches what Backward needs, so a layer is
// not shareable between concurrent passes.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const LayerSpec& spec() const = 0;
  // Per-sample input/output shapes (batch axis excluded).
  virtual const Shape& input_shape() const = 0;
  virtual const Shape& output_shape() const = 0;

  virtual Tensor Forward(const Tensor& input) = 0;
  // Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Tensor Backward(const Tensor& grad_output) = 0;

  virtual std::span<Parameter> params() { return {}; }
  virtual std::unique_ptr<Layer> Clone() const = 0;
};

// Builds a layer for the given per-sample input shape. Weights are drawn
// uniformly from +-sqrt(6 / fan_in); biases start at zero. Throws
// kShapeMismatch when the spec does not fit the input.
std::unique_ptr<Layer> MakeLayer(const LayerSpec& spec, const Shape& input,
                                 Rng& init);

class Sequential {
 public:
  Sequential() = default;
  Sequential(const Shape& input, std::span<const LayerSpec> specs, Rng& init);
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  const Shape& input_shape() const { return input_; }
  const Shape& output_shape() const;
  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  std::vector<LayerSpec> specs() const;

  // Throws kShapeMismatch unless the batch is N x input_shape().
  Tensor Forward(const Tensor& batch);
  Tensor Backward(const Tensor& grad_output);

  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;

 private:
  Shape input_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct StreamArchitecture {
  int channels = 3;
  int side = 64;
  std::vector<LayerSpec> layers;

  // Conv(8,5x5,s2)-ReLU-MaxPool(2)-Conv(16,3x3,pad 1)-ReLU-MaxPool(2)-
  // FC(feature_dim)-ReLU.
  static StreamArchitecture Toy(int side = 64, int feature_dim = 64);
};

// One modality's convolutional stack ending in the feature layer, plus an
// optional softmax classification head used only during stage-1 training.
class StreamNet {
 public:
  StreamNet() = default;
  StreamNet(const StreamArchitecture& arch, int num_classes,
            std::uint64_t seed);

  const StreamArchitecture& architecture() const { return arch_; }
  int num_classes() const { return num_classes_; }
  std::size_t feature_dim() const;
  bool has_head() const { return head_.has_value(); }
  void DiscardHead() { head_.reset(); }

  Tensor Features(const Tensor& batch);
  // Throws kConfig when the head has been discarded.
  Tensor Logits(const Tensor& batch);
  Tensor BackwardLogits(const Tensor& grad_logits);
  Tensor BackwardFeatures(const Tensor& grad_features);

  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  Sequential& features() { return features_; }

 private:
  StreamArchitecture arch_;
  int num_classes_ = 0;
  Sequential features_;
  std::optional<Sequential> head_;
};

struct FusionArchitecture {
  // Widths of the fully connected fusion layers, each followed by ReLU.
  std::vector<int> fusion_widths{64};
  int num_classes = 2;
};

// Late fusion: concatenated stream features feed the fusion layers and a
// softmax classifier.
class FusionNet {
 public:
  FusionNet() = default;
  // Throws kConfig for zero fusion layers, kNotPretrained if a stream still
  // carries its stage-1 head.
  FusionNet(StreamNet rgb, StreamNet depth, const FusionArchitecture& arch,
            std::uint64_t seed);

  const FusionArchitecture& architecture() const { return arch_; }
  StreamNet& rgb() { return rgb_; }
  StreamNet& depth() { return depth_; }
  const StreamNet& rgb() const { return rgb_; }
  const StreamNet& depth() const { return depth_; }

  void SetStreamsFrozen(bool frozen);
  bool streams_frozen() const { return streams_frozen_; }

  Tensor Logits(const Tensor& rgb_batch, const Tensor& depth_batch);
  // Stream gradients are left at zero while the streams are frozen.
  void Backward(const Tensor& grad_logits);

  std::vector<Parameter*> params();
  std::vector<Parameter*> stream_params();
  std::vector<Parameter*> fusion_params();
  std::vector<const Parameter*> params() const;

 private:
  FusionArchitecture arch_;
  StreamNet rgb_;
  StreamNet depth_;
  Sequential fusion_;
  std::size_t rgb_dim_ = 0;
  bool streams_frozen_ = true;
};

// exp(z - max z) / sum exp(z - max z).
std::vector<double> Softmax(std::span<const double> logits);

// -log max(p[label], 1e-12).
double NllLoss(std::span<const double> probabilities, int label);

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // d(mean loss)/d(logits) = (softmax - onehot) / N
};

// Mean softmax cross-entropy over an N x M logit batch.
LossAndGrad SoftmaxCrossEntropy(const Tensor& logits,
                                std::span<const int> labels);

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

// Argmax of softmax(logits); ties resolve to the lowest index.
Prediction Predict(std::span<const double> logits);

}  // namespace rgbdfuse
