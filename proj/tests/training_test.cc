#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rgbdfuse/error.h"
#include "rgbdfuse/nn.h"
#include "rgbdfuse/random.h"
#include "rgbdfuse/training.h"

namespace rgbdfuse {
namespace {

StreamArchitecture VectorArch(int dim, int hidden) {
  StreamArchitecture arch;
  arch.channels = dim;
  arch.side = 1;
  arch.layers = {LayerSpec::FullyConnected(hidden), LayerSpec::ReLU()};
  return arch;
}

// Two Gaussian blobs far apart in 2D.
TensorBatchSource SeparableToy(std::size_t n, std::uint64_t seed,
                               std::vector<int>* labels_out = nullptr) {
  Rng rng(seed);
  Tensor x({n, 2, 1, 1});
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    x[2 * i] = (c ? 1.0 : -1.0) + rng.Uniform(-0.4, 0.4);
    x[2 * i + 1] = (c ? -1.0 : 1.0) + rng.Uniform(-0.4, 0.4);
    labels.push_back(c);
  }
  if (labels_out) *labels_out = labels;
  return TensorBatchSource(std::move(x), labels);
}

// Paired inputs: the rgb vector carries bit a, the depth vector bit b, and
// the class is 2a + b.
class XorSource final : public BatchSource {
 public:
  XorSource(std::size_t n, std::uint64_t seed) : rgb_({n, 2, 1, 1}), depth_({n, 2, 1, 1}) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(i % 4);
      const double a = (c / 2) ? 1.0 : -1.0;
      const double b = (c % 2) ? 1.0 : -1.0;
      rgb_[2 * i] = a + rng.Uniform(-0.3, 0.3);
      rgb_[2 * i + 1] = rng.Uniform(-1, 1);
      depth_[2 * i] = b + rng.Uniform(-0.3, 0.3);
      depth_[2 * i + 1] = rng.Uniform(-1, 1);
      labels_.push_back(c);
    }
  }
  std::size_t size() const override { return labels_.size(); }
  Batch MakeBatch(std::span<const std::size_t> idx, Rng&) const override {
    Batch b;
    b.inputs = {Tensor({idx.size(), 2, 1, 1}), Tensor({idx.size(), 2, 1, 1})};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int k = 0; k < 2; ++k) {
        b.inputs[0][2 * i + k] = rgb_[2 * idx[i] + k];
        b.inputs[1][2 * i + k] = depth_[2 * idx[i] + k];
      }
      b.labels.push_back(labels_[idx[i]]);
    }
    return b;
  }
  // Single-modality view.
  TensorBatchSource Only(bool depth) const {
    return TensorBatchSource(depth ? depth_ : rgb_, labels_);
  }
  const std::vector<int>& labels() const { return labels_; }

 private:
  Tensor rgb_, depth_;
  std::vector<int> labels_;
};

double Accuracy(const std::vector<Prediction>& preds,
                const std::vector<int>& labels) {
  int ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i].label == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

TEST(SgdTest, PlainStep) {
  Parameter p("w", {1});
  p.grad[0] = 1.0;
  Parameter* ps[] = {&p};
  SgdStep(ps, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(p.value[0], -0.1);
}

TEST(SgdTest, ZeroGradientKeepsParams) {
  Parameter p("w", {3});
  p.value = Tensor({3}, {1, 2, 3});
  Parameter* ps[] = {&p};
  SgdStep(ps, 0.5, 0.9);
  EXPECT_EQ(p.value, Tensor({3}, {1, 2, 3}));
}

TEST(SgdTest, MomentumUnrolled) {
  Parameter p("w", {1});
  Parameter* ps[] = {&p};
  for (int i = 0; i < 2; ++i) {
    p.grad[0] = 1.0;
    SgdStep(ps, 0.01, 0.9);
  }
  EXPECT_NEAR(p.value[0], -0.029, 1e-15);
}

TEST(SgdTest, FrozenSkipped) {
  Parameter p("w", {1});
  p.frozen = true;
  p.grad[0] = 5.0;
  Parameter* ps[] = {&p};
  SgdStep(ps, 0.1, 0.9);
  EXPECT_EQ(p.value[0], 0.0);
}

TEST(LearningRateTest, StepFunction) {
  const std::vector<LrStep> s{{0, 0.01}, {20000, 0.001}};
  EXPECT_DOUBLE_EQ(LearningRate(s, 0), 0.01);
  EXPECT_DOUBLE_EQ(LearningRate(s, 19999), 0.01);
  EXPECT_DOUBLE_EQ(LearningRate(s, 20000), 0.001);
  EXPECT_DOUBLE_EQ(LearningRate(s, 50000), 0.001);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.lr_schedule = {{0, 0.1}, {10, 0.01}, {10, 0.001}};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.lr_schedule = {{5, 0.1}};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.lr_schedule = {{0, -0.1}};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.lr_schedule = {{0, 0.1}};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(TrainStreamTest, SeparableReachesPerfectAccuracy) {
  std::vector<int> labels;
  const auto data = SeparableToy(64, 1, &labels);
  StreamNet net(VectorArch(2, 8), 2, 2);
  TrainConfig cfg;
  cfg.lr_schedule = {{0, 0.05}};
  cfg.batch_size = 16;
  cfg.max_iterations = 500;
  cfg.seed = 3;
  const auto curve = TrainStream(net, data, cfg);
  ASSERT_EQ(curve.size(), 500u);
  Rng rng(0);
  EXPECT_DOUBLE_EQ(Accuracy(PredictStream(net, data, rng), labels), 1.0);
}

TEST(TrainStreamTest, WindowedLossNonIncreasing) {
  const auto data = SeparableToy(64, 4);
  StreamNet net(VectorArch(2, 8), 2, 5);
  TrainConfig cfg;
  cfg.lr_schedule = {{0, 0.02}};
  cfg.batch_size = 64;
  cfg.max_iterations = 500;
  const auto curve = TrainStream(net, data, cfg);
  double previous = 1e300;
  for (std::size_t start = 0; start < curve.size(); start += 100) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + 100; ++i) sum += curve[i].loss;
    EXPECT_LE(sum / 100.0, previous);
    previous = sum / 100.0;
  }
}

TEST(TrainStreamTest, ZeroRateLeavesParams) {
  const auto data = SeparableToy(32, 6);
  StreamNet net(VectorArch(2, 8), 2, 7);
  const StreamNet before = net;
  TrainConfig cfg;
  cfg.lr_schedule = {{0, 0.0}};
  cfg.batch_size = 8;
  cfg.max_iterations = 50;
  TrainStream(net, data, cfg);
  const auto a = before.params();
  const auto b = net.params();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

TEST(TrainStreamTest, Deterministic) {
  const auto data = SeparableToy(40, 8);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_iterations = 60;
  cfg.seed = 9;
  StreamNet a(VectorArch(2, 8), 2, 10), b(VectorArch(2, 8), 2, 10);
  const auto ca = TrainStream(a, data, cfg);
  const auto cb = TrainStream(b, data, cfg);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].loss, cb[i].loss);
  const auto pa = a.params();
  const auto pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(TrainStreamTest, NeedsHead) {
  const auto data = SeparableToy(8, 1);
  StreamNet net(VectorArch(2, 4), 2, 1);
  net.DiscardHead();
  EXPECT_THROW(TrainStream(net, data, TrainConfig{}), Error);
}

TEST(TrainFusionTest, XorBeatsSingleStreams) {
  const XorSource data(200, 11);
  TrainConfig cfg;
  cfg.lr_schedule = {{0, 0.05}};
  cfg.batch_size = 20;
  cfg.max_iterations = 600;
  cfg.seed = 12;

  double single_best = 0.0;
  for (bool depth : {false, true}) {
    StreamNet s(VectorArch(2, 16), 4, depth ? 13 : 14);
    const auto view = data.Only(depth);
    TrainStream(s, view, cfg);
    Rng rng(0);
    single_best = std::max(single_best,
                           Accuracy(PredictStream(s, view, rng), data.labels()));
  }
  EXPECT_LE(single_best, 0.6);

  // Frozen random stream features feed the fusion layers.
  StreamNet rgb(VectorArch(2, 16), 4, 15), depth(VectorArch(2, 16), 4, 16);
  rgb.DiscardHead();
  depth.DiscardHead();
  FusionArchitecture fa;
  fa.fusion_widths = {16};
  fa.num_classes = 4;
  FusionNet fus(rgb, depth, fa, 17);
  FusionNet before = fus;
  cfg.freeze_streams = true;
  TrainFusion(fus, data, cfg);
  Rng rng(0);
  const double fused = Accuracy(PredictFusion(fus, data, rng), data.labels());
  EXPECT_GT(fused, single_best);
  EXPECT_GE(fused, 0.95);

  auto sa = before.stream_params();
  auto sb = fus.stream_params();
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i]->value, sb[i]->value);
}

TEST(TrainFusionTest, RejectsStreamsWithHeads) {
  StreamNet rgb(VectorArch(2, 4), 2, 1), depth(VectorArch(2, 4), 2, 2);
  rgb.DiscardHead();
  depth.DiscardHead();
  FusionArchitecture fa;
  fa.fusion_widths = {4};
  FusionNet fus(rgb, depth, fa, 3);
  fus.rgb() = StreamNet(VectorArch(2, 4), 2, 4);
  const XorSource data(8, 1);
  try {
    TrainFusion(fus, data, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPretrained);
  }
}

TEST(ImageBatchSourceTest, SharedCropAcrossModalities) {
  std::vector<EncodedImage> a, b;
  for (int i = 0; i < 4; ++i) {
    EncodedImage img(8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(10 * x + y);
    a.push_back(img);
    b.push_back(img);
  }
  const std::vector<int> labels{0, 1, 0, 1};
  ImageBatchSource src({{a, std::nullopt}, {b, std::nullopt}}, labels, 5, true);
  Rng rng(3);
  const std::vector<std::size_t> idx{0, 1, 2, 3};
  for (int trial = 0; trial < 10; ++trial) {
    const auto batch = src.MakeBatch(idx, rng);
    ASSERT_EQ(batch.inputs.size(), 2u);
    EXPECT_EQ(batch.inputs[0].shape(), (Shape{4, 3, 5, 5}));
    EXPECT_EQ(batch.inputs[0], batch.inputs[1]);
  }
}

TEST(ImageBatchSourceTest, PlanesScaled) {
  EncodedImage img(1, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 0, 1) = 255;
  img.at(0, 0, 2) = 51;
  std::vector<double> out(3);
  ImageToPlanes(img, out);
  EXPECT_DOUBLE_EQ(out[0], -0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
  EXPECT_NEAR(out[2], -0.3, 1e-12);
}

TEST(LossCsvTest, Format) {
  const auto path = std::filesystem::temp_directory_path() / "rgbdfuse_loss.csv";
  WriteLossCsv({{0, 1.5, 0.01}, {1, 0.25, 0.001}}, path);
  std::ifstream is(path);
  std::string all((std::istreambuf_iterator<char>(is)), {});
  EXPECT_EQ(all, "iteration,loss,lr\n0,1.5,0.01\n1,0.25,0.001\n");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rgbdfuse
