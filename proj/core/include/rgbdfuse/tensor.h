#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace rgbdfuse {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array of doubles. Image batches are N x C x H x W, feature
// batches N x D.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Same data, new shape with an equal element count.
  Tensor Reshaped(Shape shape) const;
  void Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  // Sample `n` of the leading (batch) axis as its own tensor.
  Tensor Slice(std::size_t n) const;

  double SquaredNorm() const;
  bool AllFinite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Concatenates two N x D batches along the feature axis.
Tensor ConcatFeatures(const Tensor& a, const Tensor& b);

}  // namespace rgbdfuse
