#include "mmdoc/nn/network.hpp"

#include <cmath>

#include "layers.hpp"
#include "mmdoc/core/error.hpp"

namespace mmdoc::nn {

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  const auto shapes = infer_shapes(spec_);
  classes_ = shapes.back().front();

  Shape in = spec_.input_shape;
  std::size_t params = 0, buffers = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    layers_.push_back(make_layer(spec_.layers[i], in));
    param_offsets_.push_back(params);
    buffer_offsets_.push_back(buffers);
    params += layers_.back()->parameter_count();
    buffers += layers_.back()->buffer_count();
    in = shapes[i];
  }
  param_offsets_.push_back(params);
  buffer_offsets_.push_back(buffers);
  parameters_.assign(params, 0.0);
  buffers_.assign(buffers, 0.0);

  Rng rng(spec_.seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->initialize(
        std::span<double>(parameters_).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]),
        std::span<double>(buffers_).subspan(buffer_offsets_[i], buffer_offsets_[i + 1] - buffer_offsets_[i]), rng);
  }
}

void Network::check_batch(const Tensor& batch) const {
  Shape expected = spec_.input_shape;
  if (batch.shape.size() != expected.size() + 1 || !std::equal(expected.begin(), expected.end(), batch.shape.begin() + 1) ||
      batch.rows() == 0) {
    throw ShapeError("batch shape " + shape_string(batch.shape) + " does not match network input [N," +
                     shape_string(expected).substr(1));
  }
}

Tensor Network::forward(const Tensor& batch, Mode mode) {
  auto acts = activations(batch, mode);
  return std::move(acts.back());
}

std::vector<Tensor> Network::activations(const Tensor& batch, Mode mode) {
  check_batch(batch);
  std::vector<Tensor> out;
  out.reserve(layers_.size());
  const Tensor* cur = &batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto p = std::span<const double>(parameters_).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]);
    auto b = std::span<double>(buffers_).subspan(buffer_offsets_[i], buffer_offsets_[i + 1] - buffer_offsets_[i]);
    out.push_back(layers_[i]->forward(*cur, p, b, mode == Mode::Training ? b : std::span<double>{}, mode, nullptr));
    cur = &out.back();
  }
  return out;
}

Tensor Network::predict(const Tensor& batch) const {
  check_batch(batch);
  Tensor cur = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto p = std::span<const double>(parameters_).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]);
    auto b = std::span<const double>(buffers_).subspan(buffer_offsets_[i], buffer_offsets_[i + 1] - buffer_offsets_[i]);
    cur = layers_[i]->forward(cur, p, b, {}, Mode::Inference, nullptr);
  }
  return cur;
}

std::vector<ClassScores> Network::predict_scores(const Tensor& batch) const {
  const Tensor probs = predict(batch);
  std::vector<ClassScores> out;
  out.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    out.emplace_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

GradientResult Network::backward(const Tensor& batch, std::span<const ClassIndex> labels, bool need_input_gradient) {
  check_batch(batch);
  const std::size_t n = batch.rows();
  if (labels.size() != n) throw ShapeError("label count does not match batch size");
  for (auto y : labels) {
    if (y >= classes_) throw ValidationError("label " + std::to_string(y) + " out of range");
  }

  // Forward through everything but the final Softmax, keeping caches.
  const std::size_t last = layers_.size() - 1;
  std::vector<LayerCache> caches(last);
  Tensor cur = batch;
  for (std::size_t i = 0; i < last; ++i) {
    auto p = std::span<const double>(parameters_).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]);
    auto b = std::span<double>(buffers_).subspan(buffer_offsets_[i], buffer_offsets_[i + 1] - buffer_offsets_[i]);
    cur = layers_[i]->forward(cur, p, b, b, Mode::Training, &caches[i]);
  }

  // Fused softmax + mean cross-entropy: d loss / d logits = (p - onehot) / n.
  GradientResult result;
  Tensor grad(cur.shape);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto z = cur.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0;
    for (double v : z) total += std::exp(v - peak);
    const double log_total = std::log(total) + peak;
    result.loss += (log_total - z[labels[r]]) * inv_n;
    auto g = grad.row(r);
    for (std::size_t k = 0; k < z.size(); ++k) g[k] = std::exp(z[k] - log_total) * inv_n;
    g[labels[r]] -= inv_n;
  }

  result.gradients.assign(parameters_.size(), 0.0);
  for (std::size_t i = last; i-- > 0;) {
    auto p = std::span<const double>(parameters_).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]);
    auto gp = std::span<double>(result.gradients).subspan(param_offsets_[i], param_offsets_[i + 1] - param_offsets_[i]);
    const bool need = i > 0 || need_input_gradient;
    grad = layers_[i]->backward(grad, caches[i], p, gp, need);
    caches[i] = {};
  }
  if (need_input_gradient) result.input_gradient = std::move(grad);
  return result;
}

}  // namespace mmdoc::nn
