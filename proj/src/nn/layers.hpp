#pragma once

// Internal layer kernels. Each layer is immutable once built: parameters and
// buffers are passed in as spans into the owning Network's flat arrays, and
// everything backward needs is stored in a LayerCache.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mmdoc/nn/network.hpp"
#include "mmdoc/nn/rng.hpp"
#include "mmdoc/nn/spec.hpp"
#include "mmdoc/nn/tensor.hpp"

namespace mmdoc::nn {

struct LayerCache {
  Tensor input;
  Shape shape;                     // input shape, for layers that do not keep the input
  std::vector<double> aux;         // BatchNorm: normalized activations
  std::vector<double> aux2;        // BatchNorm: per-channel inverse std
  std::vector<std::size_t> index;  // MaxPool: argmax positions
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::size_t parameter_count() const { return 0; }
  virtual std::size_t buffer_count() const { return 0; }
  virtual void initialize(std::span<double> /*params*/, std::span<double> /*buffers*/, Rng& /*rng*/) const {}

  /// `buffer_update` is empty in inference mode. `cache` may be null when no
  /// backward pass follows.
  virtual Tensor forward(const Tensor& x, std::span<const double> params, std::span<const double> buffers,
                         std::span<double> buffer_update, Mode mode, LayerCache* cache) const = 0;

  /// Accumulates parameter gradients into `grad_params` and returns the input
  /// gradient (empty tensor when `need_input_grad` is false).
  virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache, std::span<const double> params,
                          std::span<double> grad_params, bool need_input_grad) const = 0;
};

/// `input_shape` is the per-sample shape feeding this layer.
std::shared_ptr<const Layer> make_layer(const LayerSpec& spec, const Shape& input_shape);

}  // namespace mmdoc::nn
