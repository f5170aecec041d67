#include "rgbdfuse/error.h"
#include "rgbdfuse/nn.h"

namespace rgbdfuse {

Sequential::Sequential(const Shape& input, std::span<const LayerSpec> specs,
                       Rng& init)
    : input_(input) {
  Shape current = input;
  for (const auto& spec : specs) {
    layers_.push_back(MakeLayer(spec, current, init));
    current = layers_.back()->output_shape();
  }
}

Sequential::Sequential(const Sequential& other) : input_(other.input_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->Clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

const Shape& Sequential::output_shape() const {
  return layers_.empty() ? input_ : layers_.back()->output_shape();
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

Tensor Sequential::Forward(const Tensor& batch) {
  if (batch.rank() != input_.size() + 1 ||
      !std::equal(input_.begin(), input_.end(), batch.shape().begin() + 1)) {
    throw Error(ErrorCode::kShapeMismatch,
                "network expects N x " + ShapeString(input_) + ", got " +
                    ShapeString(batch.shape()));
  }
  Tensor x = batch;
  for (auto& l : layers_) x = l->Forward(x);
  return x;
}

Tensor Sequential::Backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->Backward(g);
  }
  return g;
}

std::vector<Parameter*> Sequential::params() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (auto& p : l->params()) out.push_back(&p);
  }
  return out;
}

std::vector<const Parameter*> Sequential::params() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    for (auto& p : l->params()) out.push_back(&p);
  }
  return out;
}

StreamArchitecture StreamArchitecture::Toy(int side, int feature_dim) {
  StreamArchitecture arch;
  arch.channels = 3;
  arch.side = side;
  arch.layers = {LayerSpec::Conv(8, 5, 2, 0),
                 LayerSpec::ReLU(),
                 LayerSpec::MaxPool(2, 2),
                 LayerSpec::Conv(16, 3, 1, 1),
                 LayerSpec::ReLU(),
                 LayerSpec::MaxPool(2, 2),
                 LayerSpec::FullyConnected(feature_dim),
                 LayerSpec::ReLU()};
  return arch;
}

StreamNet::StreamNet(const StreamArchitecture& arch, int num_classes,
                     std::uint64_t seed)
    : arch_(arch), num_classes_(num_classes) {
  if (num_classes < 2) {
    throw Error(ErrorCode::kConfig, "a classifier needs at least two classes");
  }
  if (arch.layers.empty()) {
    throw Error(ErrorCode::kConfig, "stream architecture has no layers");
  }
  Rng init(seed);
  const Shape input{static_cast<std::size_t>(arch.channels),
                    static_cast<std::size_t>(arch.side),
                    static_cast<std::size_t>(arch.side)};
  features_ = Sequential(input, arch.layers, init);
  if (features_.output_shape().size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "stream must end in a flat feature layer");
  }
  const LayerSpec head_spec[] = {LayerSpec::FullyConnected(num_classes)};
  head_.emplace(features_.output_shape(), head_spec, init);
}

std::size_t StreamNet::feature_dim() const {
  return features_.output_shape().at(0);
}

Tensor StreamNet::Features(const Tensor& batch) {
  return features_.Forward(batch);
}

Tensor StreamNet::Logits(const Tensor& batch) {
  if (!head_) {
    throw Error(ErrorCode::kConfig, "stream head has been discarded");
  }
  return head_->Forward(features_.Forward(batch));
}

Tensor StreamNet::BackwardLogits(const Tensor& grad_logits) {
  if (!head_) {
    throw Error(ErrorCode::kConfig, "stream head has been discarded");
  }
  return features_.Backward(head_->Backward(grad_logits));
}

Tensor StreamNet::BackwardFeatures(const Tensor& grad_features) {
  return features_.Backward(grad_features);
}

std::vector<Parameter*> StreamNet::params() {
  auto out = features_.params();
  if (head_) {
    for (auto* p : head_->params()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> StreamNet::params() const {
  auto out = features_.params();
  if (head_) {
    for (const auto* p : std::as_const(*head_).params()) out.push_back(p);
  }
  return out;
}

FusionNet::FusionNet(StreamNet rgb, StreamNet depth,
                     const FusionArchitecture& arch, std::uint64_t seed)
    : arch_(arch), rgb_(std::move(rgb)), depth_(std::move(depth)) {
  if (arch.fusion_widths.empty()) {
    throw Error(ErrorCode::kConfig,
                "fusion network needs at least one fully connected layer");
  }
  if (arch.num_classes < 2) {
    throw Error(ErrorCode::kConfig, "fusion classifier needs two classes");
  }
  if (rgb_.has_head() || depth_.has_head()) {
    throw Error(ErrorCode::kNotPretrained,
                "stream still carries its stage-1 head; train it and discard "
                "the head before fusion");
  }
  std::vector<LayerSpec> specs;
  for (int w : arch.fusion_widths) {
    specs.push_back(LayerSpec::FullyConnected(w));
    specs.push_back(LayerSpec::ReLU());
  }
  specs.push_back(LayerSpec::FullyConnected(arch.num_classes));
  rgb_dim_ = rgb_.feature_dim();
  Rng init(seed);
  fusion_ = Sequential(Shape{rgb_dim_ + depth_.feature_dim()}, specs, init);
  SetStreamsFrozen(true);
}

void FusionNet::SetStreamsFrozen(bool frozen) {
  streams_frozen_ = frozen;
  for (auto* p : stream_params()) p->frozen = frozen;
}

Tensor FusionNet::Logits(const Tensor& rgb_batch, const Tensor& depth_batch) {
  return fusion_.Forward(
      ConcatFeatures(rgb_.Features(rgb_batch), depth_.Features(depth_batch)));
}

void FusionNet::Backward(const Tensor& grad_logits) {
  const Tensor g = fusion_.Backward(grad_logits);
  if (streams_frozen_) return;
  const std::size_t n = g.dim(0);
  const std::size_t total = g.dim(1);
  const std::size_t dd = total - rgb_dim_;
  Tensor g_rgb({n, rgb_dim_});
  Tensor g_depth({n, dd});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < rgb_dim_; ++i) {
      g_rgb[s * rgb_dim_ + i] = g[s * total + i];
    }
    for (std::size_t i = 0; i < dd; ++i) {
      g_depth[s * dd + i] = g[s * total + rgb_dim_ + i];
    }
  }
  rgb_.BackwardFeatures(g_rgb);
  depth_.BackwardFeatures(g_depth);
}

std::vector<Parameter*> FusionNet::stream_params() {
  auto out = rgb_.params();
  for (auto* p : depth_.params()) out.push_back(p);
  return out;
}

std::vector<Parameter*> FusionNet::fusion_params() { return fusion_.params(); }

std::vector<Parameter*> FusionNet::params() {
  auto out = stream_params();
  for (auto* p : fusion_params()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> FusionNet::params() const {
  auto out = rgb_.params();
  for (auto* p : depth_.params()) out.push_back(p);
  for (auto* p : fusion_.params()) out.push_back(p);
  return out;
}

}  // namespace rgbdfuse
