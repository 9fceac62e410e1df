#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mmdoc::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  /// Leading dimension, the batch size for batched tensors.
  std::size_t rows() const { return shape.empty() ? 0 : shape.front(); }
  /// Elements per leading-dimension slice.
  std::size_t row_size() const { return rows() == 0 ? 0 : data.size() / rows(); }

  std::span<double> row(std::size_t i) { return {data.data() + i * row_size(), row_size()}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * row_size(), row_size()}; }

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;
};

/// Stacks equally-shaped samples into a batch with a leading dimension.
Tensor stack(std::span<const Tensor> samples);

}  // namespace mmdoc::nn
