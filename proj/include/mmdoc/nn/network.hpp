#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mmdoc/core/types.hpp"
#include "mmdoc/nn/spec.hpp"
#include "mmdoc/nn/tensor.hpp"

namespace mmdoc::nn {

class Layer;

enum class Mode { Inference, Training };

struct GradientResult {
  double loss = 0;                 // mean cross-entropy over the batch
  std::vector<double> gradients;   // one entry per parameter, layer order
  Tensor input_gradient;           // d loss / d batch; empty unless requested
};

/// A built, shape-checked layer stack with its parameters.
///
/// All parameters live in one flat array in layer order; BatchNorm running
/// statistics live in a separate buffer array. `predict` is const and
/// thread-safe. `forward` in training mode and `backward` mutate the
/// BatchNorm running statistics.
class Network {
 public:
  /// Shape-checks the spec and initializes parameters from `spec.seed`:
  /// Glorot-uniform weights, zero biases, BatchNorm scale 1 / shift 0.
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const Shape& input_shape() const { return spec_.input_shape; }
  std::size_t classes() const { return classes_; }

  std::size_t parameter_count() const { return parameters_.size(); }
  std::span<double> parameters() { return parameters_; }
  std::span<const double> parameters() const { return parameters_; }
  std::span<double> buffers() { return buffers_; }
  std::span<const double> buffers() const { return buffers_; }

  /// Class probabilities, shape [batch, c]. Training mode uses batch
  /// statistics in BatchNorm and updates the running statistics.
  Tensor forward(const Tensor& batch, Mode mode);
  /// Inference-mode forward pass.
  Tensor predict(const Tensor& batch) const;
  std::vector<ClassScores> predict_scores(const Tensor& batch) const;

  /// Output of every layer for one forward pass (index i = after layer i).
  std::vector<Tensor> activations(const Tensor& batch, Mode mode);

  /// Training-mode forward pass followed by backpropagation of the mean
  /// cross-entropy loss against `labels`.
  GradientResult backward(const Tensor& batch, std::span<const ClassIndex> labels,
                          bool need_input_gradient = false);

 private:
  void check_batch(const Tensor& batch) const;

  NetworkSpec spec_;
  std::vector<std::shared_ptr<const Layer>> layers_;  // stateless, shared by copies
  std::vector<std::size_t> param_offsets_;
  std::vector<std::size_t> buffer_offsets_;
  std::vector<double> parameters_;
  std::vector<double> buffers_;
  std::size_t classes_ = 0;
};

inline Network build_network(const NetworkSpec& spec) { return Network(spec); }

}  // namespace mmdoc::nn
