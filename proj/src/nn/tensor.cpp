#include "mmdoc/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "mmdoc/core/error.hpp"

namespace mmdoc::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_string(shape) + " does not match " + std::to_string(data.size()) +
                     " values");
  }
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) throw ShapeError("cannot stack an empty sample list");
  Shape shape = samples.front().shape;
  shape.insert(shape.begin(), samples.size());
  Tensor out(shape);
  const std::size_t n = samples.front().size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].shape != samples.front().shape) throw ShapeError("stacked samples differ in shape");
    std::copy(samples[i].data.begin(), samples[i].data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

}  // namespace mmdoc::nn
