#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mmdoc/nn/tensor.hpp"

namespace mmdoc::nn {

struct DenseSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool operator==(const DenseSpec&) const = default;
};

struct Conv2DSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;  // zero padding on every border
  bool operator==(const Conv2DSpec&) const = default;
};

struct MaxPool2DSpec {
  std::size_t window = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPool2DSpec&) const = default;
};

struct BatchNormSpec {
  std::size_t num_features = 0;
  double epsilon = 1e-5;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  bool operator==(const BatchNormSpec&) const = default;
};

struct ReLUSpec {
  bool operator==(const ReLUSpec&) const = default;
};
struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};
struct SoftmaxSpec {
  bool operator==(const SoftmaxSpec&) const = default;
};

using LayerSpec =
    std::variant<DenseSpec, Conv2DSpec, MaxPool2DSpec, BatchNormSpec, ReLUSpec, FlattenSpec, SoftmaxSpec>;

/// Short human-readable description, e.g. "Dense(4->3)".
std::string describe(const LayerSpec& layer);

/// Declarative layer stack. Must end in a Softmax; `seed` drives weight init.
struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;

  bool operator==(const NetworkSpec&) const = default;
};

/// Output shape of every layer, in order. Throws ShapeError naming the first
/// incompatible layer pair.
std::vector<Shape> infer_shapes(const NetworkSpec& spec);

/// Trainable parameter count implied by the spec.
std::size_t parameter_count(const NetworkSpec& spec);
/// Non-trainable state (BatchNorm running statistics).
std::size_t buffer_count(const NetworkSpec& spec);

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

}  // namespace mmdoc::nn
