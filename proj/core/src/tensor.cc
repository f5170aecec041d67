#include "rgbdfuse/tensor.h"

#include <cmath>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor data does not match shape " + ShapeString(shape_));
  }
}

Tensor Tensor::Reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::Slice(std::size_t n) const {
  if (shape_.empty() || n >= shape_[0]) {
    throw Error(ErrorCode::kShapeMismatch, "slice index out of range");
  }
  Shape inner(shape_.begin() + 1, shape_.end());
  const std::size_t len = NumElements(inner);
  inner.insert(inner.begin(), 1);
  return Tensor(inner, std::vector<double>(data_.begin() + n * len,
                                           data_.begin() + (n + 1) * len));
}

double Tensor::SquaredNorm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor ConcatFeatures(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot concatenate " + ShapeString(a.shape()) + " and " +
                    ShapeString(b.shape()));
  }
  const std::size_t n = a.dim(0);
  const std::size_t da = a.dim(1);
  const std::size_t db = b.dim(1);
  Tensor out({n, da + db});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data().begin() + i * da, da, out.data().begin() + i * (da + db));
    std::copy_n(b.data().begin() + i * db, db,
                out.data().begin() + i * (da + db) + da);
  }
  return out;
}

}  // namespace rgbdfuse
