#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include "rgbdfuse/error.h"
#include "rgbdfuse/nn.h"

namespace rgbdfuse {

LayerSpec LayerSpec::Conv(int out_channels, int kernel, int stride, int pad) {
  return {Kind::kConv, out_channels, kernel, stride, pad};
}
LayerSpec LayerSpec::MaxPool(int kernel, int stride) {
  return {Kind::kMaxPool, 0, kernel, stride, 0};
}
LayerSpec LayerSpec::ReLU() { return {Kind::kReLU, 0, 0, 1, 0}; }
LayerSpec LayerSpec::FullyConnected(int out_dim) {
  return {Kind::kFullyConnected, out_dim, 0, 1, 0};
}
LayerSpec LayerSpec::Softmax() { return {Kind::kSoftmax, 0, 0, 1, 0}; }

std::string LayerSpec::ToString() const {
  char buf[64];
  switch (kind) {
    case Kind::kConv:
      std::snprintf(buf, sizeof(buf), "conv(%d,%d,%d,%d)", out, kernel, stride,
                    pad);
      return buf;
    case Kind::kMaxPool:
      std::snprintf(buf, sizeof(buf), "maxpool(%d,%d)", kernel, stride);
      return buf;
    case Kind::kReLU: return "relu";
    case Kind::kFullyConnected:
      std::snprintf(buf, sizeof(buf), "fc(%d)", out);
      return buf;
    case Kind::kSoftmax: return "softmax";
  }
  return "?";
}

LayerSpec LayerSpec::Parse(const std::string& text) {
  static const std::regex kConv(R"(conv\((\d+),(\d+),(\d+),(\d+)\))");
  static const std::regex kPool(R"(maxpool\((\d+),(\d+)\))");
  static const std::regex kFc(R"(fc\((\d+)\))");
  std::smatch m;
  if (std::regex_match(text, m, kConv)) {
    return Conv(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]),
                std::stoi(m[4]));
  }
  if (std::regex_match(text, m, kPool)) {
    return MaxPool(std::stoi(m[1]), std::stoi(m[2]));
  }
  if (std::regex_match(text, m, kFc)) return FullyConnected(std::stoi(m[1]));
  if (text == "relu") return ReLU();
  if (text == "softmax") return Softmax();
  throw Error(ErrorCode::kFormat, "unknown layer spec '" + text + "'");
}

namespace {

void CheckBatch(const Tensor& t, const Shape& per_sample, const char* who) {
  if (t.rank() != per_sample.size() + 1 ||
      !std::equal(per_sample.begin(), per_sample.end(), t.shape().begin() + 1)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(who) + " expects N x " + ShapeString(per_sample) +
                    ", got " + ShapeString(t.shape()));
  }
}

Shape WithBatch(std::size_t n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

void InitUniform(Tensor& w, std::size_t fan_in, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : w.data()) v = rng.Uniform(-a, a);
}

class ConvLayer final : public Layer {
 public:
  ConvLayer(const LayerSpec& spec, const Shape& in, Rng& init)
      : spec_(spec), in_(in) {
    if (in.size() != 3 || spec.out <= 0 || spec.kernel <= 0 ||
        spec.stride <= 0 || spec.pad < 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  spec.ToString() + " needs a C x H x W input, got " +
                      ShapeString(in));
    }
    const long h = static_cast<long>(in[1]) + 2 * spec.pad - spec.kernel;
    const long w = static_cast<long>(in[2]) + 2 * spec.pad - spec.kernel;
    if (h < 0 || w < 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  spec.ToString() + " kernel larger than input " +
                      ShapeString(in));
    }
    out_ = {static_cast<std::size_t>(spec.out),
            static_cast<std::size_t>(h / spec.stride + 1),
            static_cast<std::size_t>(w / spec.stride + 1)};
    const std::size_t k = spec.kernel;
    params_.emplace_back("weight", Shape{out_[0], in[0], k, k});
    params_.emplace_back("bias", Shape{out_[0]});
    InitUniform(params_[0].value, in[0] * k * k, init);
  }

  const LayerSpec& spec() const override { return spec_; }
  const Shape& input_shape() const override { return in_; }
  const Shape& output_shape() const override { return out_; }
  std::span<Parameter> params() override { return params_; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<ConvLayer>(*this);
  }

  Tensor Forward(const Tensor& input) override {
    CheckBatch(input, in_, "conv");
    input_ = input;
    const std::size_t n = input.dim(0);
    const int C = in_[0], H = in_[1], W = in_[2];
    const int O = out_[0], Ho = out_[1], Wo = out_[2];
    const int K = spec_.kernel, S = spec_.stride, P = spec_.pad;
    const double* x = input.data().data();
    const double* w = params_[0].value.data().data();
    const double* b = params_[1].value.data().data();
    Tensor out(WithBatch(n, out_));
    double* y = out.data().data();
    for (std::size_t s = 0; s < n; ++s) {
      const double* xs = x + s * C * H * W;
      double* ys = y + s * O * Ho * Wo;
      for (int o = 0; o < O; ++o) {
        const double* wo = w + o * C * K * K;
        for (int oy = 0; oy < Ho; ++oy) {
          for (int ox = 0; ox < Wo; ++ox) {
            double acc = b[o];
            for (int c = 0; c < C; ++c) {
              for (int ky = 0; ky < K; ++ky) {
                const int iy = oy * S - P + ky;
                if (iy < 0 || iy >= H) continue;
                const double* xrow = xs + (c * H + iy) * W;
                const double* wrow = wo + (c * K + ky) * K;
                for (int kx = 0; kx < K; ++kx) {
                  const int ix = ox * S - P + kx;
                  if (ix < 0 || ix >= W) continue;
                  acc += xrow[ix] * wrow[kx];
                }
              }
            }
            ys[(o * Ho + oy) * Wo + ox] = acc;
          }
        }
      }
    }
    return out;
  }

  Tensor Backward(const Tensor& grad_output) override {
    CheckBatch(grad_output, out_, "conv backward");
    const std::size_t n = grad_output.dim(0);
    const int C = in_[0], H = in_[1], W = in_[2];
    const int O = out_[0], Ho = out_[1], Wo = out_[2];
    const int K = spec_.kernel, S = spec_.stride, P = spec_.pad;
    const double* x = input_.data().data();
    const double* w = params_[0].value.data().data();
    double* dw = params_[0].grad.data().data();
    double* db = params_[1].grad.data().data();
    const double* g = grad_output.data().data();
    Tensor grad_input(input_.shape());
    double* dx = grad_input.data().data();
    for (std::size_t s = 0; s < n; ++s) {
      const double* xs = x + s * C * H * W;
      double* dxs = dx + s * C * H * W;
      const double* gs = g + s * O * Ho * Wo;
      for (int o = 0; o < O; ++o) {
        const double* wo = w + o * C * K * K;
        double* dwo = dw + o * C * K * K;
        for (int oy = 0; oy < Ho; ++oy) {
          for (int ox = 0; ox < Wo; ++ox) {
            const double go = gs[(o * Ho + oy) * Wo + ox];
            if (go == 0.0) continue;
            db[o] += go;
            for (int c = 0; c < C; ++c) {
              for (int ky = 0; ky < K; ++ky) {
                const int iy = oy * S - P + ky;
                if (iy < 0 || iy >= H) continue;
                const int xoff = (c * H + iy) * W;
                const int woff = (c * K + ky) * K;
                for (int kx = 0; kx < K; ++kx) {
                  const int ix = ox * S - P + kx;
                  if (ix < 0 || ix >= W) continue;
                  dwo[woff + kx] += go * xs[xoff + ix];
                  dxs[xoff + ix] += go * wo[woff + kx];
                }
              }
            }
          }
        }
      }
    }
    return grad_input;
  }

 private:
  LayerSpec spec_;
  Shape in_;
  Shape out_;
  std::vector<Parameter> params_;
  Tensor input_;
};

class MaxPoolLayer final : public Layer {
 public:
  MaxPoolLayer(const LayerSpec& spec, const Shape& in) : spec_(spec), in_(in) {
    if (in.size() != 3 || spec.kernel <= 0 || spec.stride <= 0 ||
        in[1] < static_cast<std::size_t>(spec.kernel) ||
        in[2] < static_cast<std::size_t>(spec.kernel)) {
      throw Error(ErrorCode::kShapeMismatch,
                  spec.ToString() + " does not fit input " + ShapeString(in));
    }
    out_ = {in[0], (in[1] - spec.kernel) / spec.stride + 1,
            (in[2] - spec.kernel) / spec.stride + 1};
  }

  const LayerSpec& spec() const override { return spec_; }
  const Shape& input_shape() const override { return in_; }
  const Shape& output_shape() const override { return out_; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<MaxPoolLayer>(*this);
  }

  Tensor Forward(const Tensor& input) override {
    CheckBatch(input, in_, "maxpool");
    const std::size_t n = input.dim(0);
    const std::size_t C = in_[0], H = in_[1], W = in_[2];
    const std::size_t Ho = out_[1], Wo = out_[2];
    const std::size_t K = spec_.kernel, S = spec_.stride;
    in_batch_ = input.shape();
    Tensor out(WithBatch(n, out_));
    argmax_.assign(out.size(), 0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t plane = (s * C + c) * H * W;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          for (std::size_t ox = 0; ox < Wo; ++ox) {
            std::size_t best = plane + oy * S * W + ox * S;
            for (std::size_t ky = 0; ky < K; ++ky) {
              for (std::size_t kx = 0; kx < K; ++kx) {
                const std::size_t idx = plane + (oy * S + ky) * W + ox * S + kx;
                // Strict comparison: the first maximum in scan order wins.
                if (input[idx] > input[best]) best = idx;
              }
            }
            const std::size_t o = ((s * C + c) * Ho + oy) * Wo + ox;
            out[o] = input[best];
            argmax_[o] = best;
          }
        }
      }
    }
    return out;
  }

  Tensor Backward(const Tensor& grad_output) override {
    CheckBatch(grad_output, out_, "maxpool backward");
    Tensor grad_input(in_batch_);
    for (std::size_t o = 0; o < grad_output.size(); ++o) {
      grad_input[argmax_[o]] += grad_output[o];
    }
    return grad_input;
  }

 private:
  LayerSpec spec_;
  Shape in_;
  Shape out_;
  Shape in_batch_;
  std::vector<std::size_t> argmax_;
};

class ReLULayer final : public Layer {
 public:
  ReLULayer(const LayerSpec& spec, const Shape& in)
      : spec_(spec), in_(in), out_(in) {}

  const LayerSpec& spec() const override { return spec_; }
  const Shape& input_shape() const override { return in_; }
  const Shape& output_shape() const override { return out_; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<ReLULayer>(*this);
  }

  Tensor Forward(const Tensor& input) override {
    CheckBatch(input, in_, "relu");
    Tensor out = input;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    input_ = input;
    return out;
  }

  Tensor Backward(const Tensor& grad_output) override {
    Tensor grad = grad_output;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!(input_[i] > 0.0)) grad[i] = 0.0;
    }
    return grad;
  }

 private:
  LayerSpec spec_;
  Shape in_;
  Shape out_;
  Tensor input_;
};

class FullyConnectedLayer final : public Layer {
 public:
  FullyConnectedLayer(const LayerSpec& spec, const Shape& in, Rng& init)
      : spec_(spec), in_(in) {
    if (spec.out <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "fc output must be positive");
    }
    fan_in_ = NumElements(in);
    out_ = {static_cast<std::size_t>(spec.out)};
    params_.emplace_back("weight", Shape{out_[0], fan_in_});
    params_.emplace_back("bias", Shape{out_[0]});
    InitUniform(params_[0].value, fan_in_, init);
  }

  const LayerSpec& spec() const override { return spec_; }
  const Shape& input_shape() const override { return in_; }
  const Shape& output_shape() const override { return out_; }
  std::span<Parameter> params() override { return params_; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<FullyConnectedLayer>(*this);
  }

  Tensor Forward(const Tensor& input) override {
    CheckBatch(input, in_, "fc");
    input_ = input;
    const std::size_t n = input.dim(0);
    const std::size_t D = fan_in_, O = out_[0];
    const double* w = params_[0].value.data().data();
    const double* b = params_[1].value.data().data();
    Tensor out({n, O});
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = input.data().data() + s * D;
      for (std::size_t o = 0; o < O; ++o) {
        const double* wr = w + o * D;
        double acc = b[o];
        for (std::size_t d = 0; d < D; ++d) acc += wr[d] * x[d];
        out[s * O + o] = acc;
      }
    }
    return out;
  }

  Tensor Backward(const Tensor& grad_output) override {
    CheckBatch(grad_output, out_, "fc backward");
    const std::size_t n = grad_output.dim(0);
    const std::size_t D = fan_in_, O = out_[0];
    const double* w = params_[0].value.data().data();
    double* dw = params_[0].grad.data().data();
    double* db = params_[1].grad.data().data();
    Tensor grad_input(input_.shape());
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = input_.data().data() + s * D;
      double* dx = grad_input.data().data() + s * D;
      for (std::size_t o = 0; o < O; ++o) {
        const double g = grad_output[s * O + o];
        if (g == 0.0) continue;
        db[o] += g;
        double* dwr = dw + o * D;
        const double* wr = w + o * D;
        for (std::size_t d = 0; d < D; ++d) {
          dwr[d] += g * x[d];
          dx[d] += g * wr[d];
        }
      }
    }
    return grad_input;
  }

 private:
  LayerSpec spec_;
  Shape in_;
  Shape out_;
  std::size_t fan_in_ = 0;
  std::vector<Parameter> params_;
  Tensor input_;
};

class SoftmaxLayer final : public Layer {
 public:
  SoftmaxLayer(const LayerSpec& spec, const Shape& in)
      : spec_(spec), in_(in), out_(in) {
    if (in.size() != 1) {
      throw Error(ErrorCode::kShapeMismatch,
                  "softmax needs a flat input, got " + ShapeString(in));
    }
  }

  const LayerSpec& spec() const override { return spec_; }
  const Shape& input_shape() const override { return in_; }
  const Shape& output_shape() const override { return out_; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<SoftmaxLayer>(*this);
  }

  Tensor Forward(const Tensor& input) override {
    CheckBatch(input, in_, "softmax");
    const std::size_t n = input.dim(0), M = in_[0];
    output_ = Tensor(input.shape());
    for (std::size_t s = 0; s < n; ++s) {
      const auto p = rgbdfuse::Softmax(input.data().subspan(s * M, M));
      std::copy(p.begin(), p.end(), output_.data().begin() + s * M);
    }
    return output_;
  }

  Tensor Backward(const Tensor& grad_output) override {
    const std::size_t n = grad_output.dim(0), M = in_[0];
    Tensor grad(grad_output.shape());
    for (std::size_t s = 0; s < n; ++s) {
      double dot = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        dot += grad_output[s * M + i] * output_[s * M + i];
      }
      for (std::size_t i = 0; i < M; ++i) {
        grad[s * M + i] = output_[s * M + i] * (grad_output[s * M + i] - dot);
      }
    }
    return grad;
  }

 private:
  LayerSpec spec_;
  Shape in_;
  Shape out_;
  Tensor output_;
};

}  // namespace

std::unique_ptr<Layer> MakeLayer(const LayerSpec& spec, const Shape& input,
                                 Rng& init) {
  switch (spec.kind) {
    case LayerSpec::Kind::kConv:
      return std::make_unique<ConvLayer>(spec, input, init);
    case LayerSpec::Kind::kMaxPool:
      return std::make_unique<MaxPoolLayer>(spec, input);
    case LayerSpec::Kind::kReLU:
      return std::make_unique<ReLULayer>(spec, input);
    case LayerSpec::Kind::kFullyConnected:
      return std::make_unique<FullyConnectedLayer>(spec, input, init);
    case LayerSpec::Kind::kSoftmax:
      return std::make_unique<SoftmaxLayer>(spec, input);
  }
  throw Error(ErrorCode::kConfig, "unhandled layer kind");
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double NllLoss(std::span<const double> probabilities, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probabilities.size()) {
    throw Error(ErrorCode::kShapeMismatch, "label outside probability vector");
  }
  return -std::log(std::max(probabilities[label], 1e-12));
}

LossAndGrad SoftmaxCrossEntropy(const Tensor& logits,
                                std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() ||
      labels.empty()) {
    throw Error(ErrorCode::kShapeMismatch,
                "logits " + ShapeString(logits.shape()) + " vs " +
                    std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = logits.dim(0), M = logits.dim(1);
  LossAndGrad out{0.0, Tensor(logits.shape())};
  for (std::size_t s = 0; s < n; ++s) {
    const auto p = Softmax(logits.data().subspan(s * M, M));
    out.loss += NllLoss(p, labels[s]);
    for (std::size_t k = 0; k < M; ++k) {
      const double y = static_cast<int>(k) == labels[s] ? 1.0 : 0.0;
      out.grad[s * M + k] = (p[k] - y) / static_cast<double>(n);
    }
  }
  out.loss /= static_cast<double>(n);
  return out;
}

Prediction Predict(std::span<const double> logits) {
  Prediction pred;
  pred.probabilities = Softmax(logits);
  for (std::size_t k = 1; k < pred.probabilities.size(); ++k) {
    if (pred.probabilities[k] > pred.probabilities[pred.label]) {
      pred.label = static_cast<int>(k);
    }
  }
  return pred;
}

}  // namespace rgbdfuse
