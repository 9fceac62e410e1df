#include "mmdoc/nn/spec.hpp"

#include "mmdoc/core/error.hpp"

namespace mmdoc::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string where(const NetworkSpec& spec, std::size_t i) {
  std::string self = "layer " + std::to_string(i) + " " + describe(spec.layers[i]);
  if (i == 0) return self + " cannot accept the network input";
  return self + " cannot follow layer " + std::to_string(i - 1) + " " + describe(spec.layers[i - 1]);
}

[[noreturn]] void fail(const NetworkSpec& spec, std::size_t i, const Shape& in, const std::string& why) {
  throw ShapeError(where(spec, i) + ": input shape " + shape_string(in) + ", " + why);
}

}  // namespace

std::string describe(const LayerSpec& layer) {
  return std::visit(
      overloaded{
          [](const DenseSpec& d) { return "Dense(" + std::to_string(d.in_dim) + "->" + std::to_string(d.out_dim) + ")"; },
          [](const Conv2DSpec& c) {
            return "Conv2D(" + std::to_string(c.in_channels) + "->" + std::to_string(c.out_channels) + ", k" +
                   std::to_string(c.kernel) + " s" + std::to_string(c.stride) + " p" + std::to_string(c.padding) + ")";
          },
          [](const MaxPool2DSpec& p) {
            return "MaxPool2D(w" + std::to_string(p.window) + " s" + std::to_string(p.stride) + ")";
          },
          [](const BatchNormSpec& b) { return "BatchNorm(" + std::to_string(b.num_features) + ")"; },
          [](const ReLUSpec&) { return std::string("ReLU"); },
          [](const FlattenSpec&) { return std::string("Flatten"); },
          [](const SoftmaxSpec&) { return std::string("Softmax"); },
      },
      layer);
}

std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
  if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0) {
    throw ShapeError("network input shape must be non-empty with positive dimensions");
  }
  if (spec.layers.empty() || !std::holds_alternative<SoftmaxSpec>(spec.layers.back())) {
    throw ShapeError("network must end with a Softmax layer");
  }
  std::vector<Shape> shapes;
  Shape cur = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape in = cur;
    std::visit(
        overloaded{
            [&](const DenseSpec& d) {
              if (d.in_dim == 0 || d.out_dim == 0) fail(spec, i, in, "dimensions must be positive");
              if (in.size() != 1 || in[0] != d.in_dim) {
                fail(spec, i, in, "expects [" + std::to_string(d.in_dim) + "]");
              }
              cur = {d.out_dim};
            },
            [&](const Conv2DSpec& c) {
              if (c.in_channels == 0 || c.out_channels == 0 || c.kernel == 0 || c.stride == 0) {
                fail(spec, i, in, "channels, kernel and stride must be positive");
              }
              if (in.size() != 3 || in[0] != c.in_channels) {
                fail(spec, i, in, "expects [" + std::to_string(c.in_channels) + ",H,W]");
              }
              const std::size_t h = in[1] + 2 * c.padding, w = in[2] + 2 * c.padding;
              if (h < c.kernel || w < c.kernel) fail(spec, i, in, "spatial extent smaller than kernel");
              cur = {c.out_channels, (h - c.kernel) / c.stride + 1, (w - c.kernel) / c.stride + 1};
            },
            [&](const MaxPool2DSpec& p) {
              if (p.window == 0 || p.stride == 0) fail(spec, i, in, "window and stride must be positive");
              if (in.size() != 3) fail(spec, i, in, "expects [C,H,W]");
              if (in[1] < p.window || in[2] < p.window) fail(spec, i, in, "spatial extent smaller than window");
              cur = {in[0], (in[1] - p.window) / p.stride + 1, (in[2] - p.window) / p.stride + 1};
            },
            [&](const BatchNormSpec& b) {
              if ((in.size() != 1 && in.size() != 3) || in[0] != b.num_features) {
                fail(spec, i, in, "expects " + std::to_string(b.num_features) + " features or channels");
              }
              if (!(b.epsilon > 0) || !(b.momentum >= 0 && b.momentum < 1)) {
                fail(spec, i, in, "epsilon must be positive and momentum in [0,1)");
              }
            },
            [&](const ReLUSpec&) {},
            [&](const FlattenSpec&) { cur = {shape_size(in)}; },
            [&](const SoftmaxSpec&) {
              if (i + 1 != spec.layers.size()) fail(spec, i, in, "Softmax is only allowed as the final layer");
              if (in.size() != 1) fail(spec, i, in, "expects a flat vector of class logits");
            },
        },
        spec.layers[i]);
    shapes.push_back(cur);
  }
  return shapes;
}

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& layer : spec.layers) {
    if (auto* d = std::get_if<DenseSpec>(&layer)) total += d->in_dim * d->out_dim + d->out_dim;
    if (auto* c = std::get_if<Conv2DSpec>(&layer)) {
      total += c->out_channels * c->in_channels * c->kernel * c->kernel + c->out_channels;
    }
    if (auto* b = std::get_if<BatchNormSpec>(&layer)) total += 2 * b->num_features;
  }
  return total;
}

std::size_t buffer_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& layer : spec.layers) {
    if (auto* b = std::get_if<BatchNormSpec>(&layer)) total += 2 * b->num_features;
  }
  return total;
}

nlohmann::json to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : spec.layers) {
    layers.push_back(std::visit(
        overloaded{
            [](const DenseSpec& d) -> nlohmann::json {
              return {{"kind", "dense"}, {"in_dim", d.in_dim}, {"out_dim", d.out_dim}};
            },
            [](const Conv2DSpec& c) -> nlohmann::json {
              return {{"kind", "conv2d"},      {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
                      {"kernel", c.kernel},    {"stride", c.stride},           {"padding", c.padding}};
            },
            [](const MaxPool2DSpec& p) -> nlohmann::json {
              return {{"kind", "maxpool2d"}, {"window", p.window}, {"stride", p.stride}};
            },
            [](const BatchNormSpec& b) -> nlohmann::json {
              return {{"kind", "batchnorm"},
                      {"num_features", b.num_features},
                      {"epsilon", b.epsilon},
                      {"momentum", b.momentum}};
            },
            [](const ReLUSpec&) -> nlohmann::json { return {{"kind", "relu"}}; },
            [](const FlattenSpec&) -> nlohmann::json { return {{"kind", "flatten"}}; },
            [](const SoftmaxSpec&) -> nlohmann::json { return {{"kind", "softmax"}}; },
        },
        layer));
  }
  return {{"input_shape", spec.input_shape}, {"layers", layers}, {"seed", spec.seed}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  try {
    NetworkSpec spec;
    spec.input_shape = j.at("input_shape").get<Shape>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& l : j.at("layers")) {
      const auto kind = l.at("kind").get<std::string>();
      if (kind == "dense") {
        spec.layers.emplace_back(DenseSpec{l.at("in_dim").get<std::size_t>(), l.at("out_dim").get<std::size_t>()});
      } else if (kind == "conv2d") {
        spec.layers.emplace_back(Conv2DSpec{l.at("in_channels").get<std::size_t>(),
                                            l.at("out_channels").get<std::size_t>(), l.at("kernel").get<std::size_t>(),
                                            l.at("stride").get<std::size_t>(), l.at("padding").get<std::size_t>()});
      } else if (kind == "maxpool2d") {
        spec.layers.emplace_back(MaxPool2DSpec{l.at("window").get<std::size_t>(), l.at("stride").get<std::size_t>()});
      } else if (kind == "batchnorm") {
        spec.layers.emplace_back(BatchNormSpec{l.at("num_features").get<std::size_t>(), l.at("epsilon").get<double>(),
                                               l.at("momentum").get<double>()});
      } else if (kind == "relu") {
        spec.layers.emplace_back(ReLUSpec{});
      } else if (kind == "flatten") {
        spec.layers.emplace_back(FlattenSpec{});
      } else if (kind == "softmax") {
        spec.layers.emplace_back(SoftmaxSpec{});
      } else {
        throw FormatError("unknown layer kind '" + kind + "'");
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network spec: ") + e.what());
  }
}

}  // namespace mmdoc::nn
