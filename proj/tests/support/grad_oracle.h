#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rgbdfuse/nn.h"
#include "rgbdfuse/random.h"
#include "rgbdfuse/tensor.h"

namespace rgbdfuse::testing {

// One scalar whose analytic derivative is compared to a central difference.
struct Probe {
  double* value;
  double analytic;
  std::string label;
};

struct GradCheck {
  int probed = 0;
  int failed = 0;
  double worst = 0.0;
  std::string worst_label;

  bool ok() const { return probed > 0 && failed == 0; }
};

inline double RelativeError(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Central differences of `loss` in every probed scalar, restored afterwards.
inline GradCheck CheckProbes(const std::function<double()>& loss,
                             const std::vector<Probe>& probes,
                             double eps = 1e-4, double tol = 1e-3) {
  GradCheck r;
  for (const Probe& p : probes) {
    const double saved = *p.value;
    *p.value = saved + eps;
    const double plus = loss();
    *p.value = saved - eps;
    const double minus = loss();
    *p.value = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double err = RelativeError(p.analytic, numeric);
    ++r.probed;
    if (err > tol) ++r.failed;
    if (err > r.worst) {
      r.worst = err;
      r.worst_label = p.label;
    }
  }
  return r;
}

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.Uniform(lo, hi);
  return t;
}

// Picks up to `n` distinct indices out of [0, size).
inline std::vector<std::size_t> PickIndices(std::size_t size, std::size_t n,
                                            Rng& rng) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  for (std::size_t i = 0; i + 1 < size && i < n; ++i) {
    std::swap(idx[i], idx[i + rng.Index(size - i)]);
  }
  idx.resize(std::min(size, n));
  return idx;
}

// Checks one layer under the loss sum(out * weights) for a fixed random
// weighting, probing input entries and every parameter tensor.
inline GradCheck CheckLayer(const LayerSpec& spec, const Shape& input_shape,
                            std::size_t batch, std::uint64_t seed,
                            std::size_t probes_per_tensor = 60) {
  Rng rng(seed);
  auto layer = MakeLayer(spec, input_shape, rng);
  Shape in = input_shape;
  in.insert(in.begin(), batch);
  Tensor x = RandomTensor(in, rng);
  Shape out = layer->output_shape();
  out.insert(out.begin(), batch);
  const Tensor weights = RandomTensor(out, rng);

  auto loss = [&]() {
    const Tensor y = layer->Forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
    return s;
  };
  for (Parameter& p : layer->params()) p.grad.Fill(0.0);
  layer->Forward(x);
  const Tensor grad_x = layer->Backward(weights);

  std::vector<Probe> probes;
  for (std::size_t i : PickIndices(x.size(), probes_per_tensor, rng)) {
    probes.push_back({&x[i], grad_x[i], "input[" + std::to_string(i) + "]"});
  }
  for (Parameter& p : layer->params()) {
    for (std::size_t i : PickIndices(p.value.size(), probes_per_tensor, rng)) {
      probes.push_back(
          {&p.value[i], p.grad[i], p.name + "[" + std::to_string(i) + "]"});
    }
  }
  return CheckProbes(loss, probes);
}

// Full two-stream network with trainable streams under the mean softmax
// cross-entropy loss.
inline GradCheck CheckFusionNetwork(std::uint64_t seed, std::size_t n_probes,
                                    int side = 20) {
  StreamArchitecture arch;
  arch.channels = 3;
  arch.side = side;
  arch.layers = {LayerSpec::Conv(4, 5, 2, 0), LayerSpec::ReLU(),
                 LayerSpec::MaxPool(2, 2), LayerSpec::Conv(6, 3, 1, 1),
                 LayerSpec::ReLU(), LayerSpec::FullyConnected(12),
                 LayerSpec::ReLU()};
  const int classes = 3;
  StreamNet rgb(arch, classes, DeriveSeed(seed, "rgb"));
  StreamNet depth(arch, classes, DeriveSeed(seed, "depth"));
  rgb.DiscardHead();
  depth.DiscardHead();
  FusionArchitecture fa;
  fa.fusion_widths = {10};
  fa.num_classes = classes;
  FusionNet net(std::move(rgb), std::move(depth), fa, DeriveSeed(seed, "fus"));
  net.SetStreamsFrozen(false);

  Rng rng(DeriveSeed(seed, "data"));
  const std::size_t n = 3;
  const Shape shape{n, 3, static_cast<std::size_t>(side),
                    static_cast<std::size_t>(side)};
  const Tensor xr = RandomTensor(shape, rng, -0.5, 0.5);
  const Tensor xd = RandomTensor(shape, rng, -0.5, 0.5);
  const std::vector<int> labels{0, 2, 1};

  auto loss = [&]() {
    return SoftmaxCrossEntropy(net.Logits(xr, xd), labels).loss;
  };
  for (Parameter* p : net.params()) p->grad.Fill(0.0);
  const auto lg = SoftmaxCrossEntropy(net.Logits(xr, xd), labels);
  net.Backward(lg.grad);

  // Flat index over every parameter scalar.
  std::vector<std::pair<Parameter*, std::size_t>> all;
  for (Parameter* p : net.params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) all.emplace_back(p, i);
  }
  std::vector<Probe> probes;
  for (std::size_t k : PickIndices(all.size(), n_probes, rng)) {
    auto [p, i] = all[k];
    probes.push_back(
        {&p->value[i], p->grad[i], p->name + "[" + std::to_string(i) + "]"});
  }
  return CheckProbes(loss, probes);
}

}  // namespace rgbdfuse::testing
