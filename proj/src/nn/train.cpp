#include "mmdoc/nn/train.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "mmdoc/core/error.hpp"
#include "mmdoc/nn/rng.hpp"

namespace mmdoc::nn {

void CosineBatchSchedule::validate() const {
  if (!(l_min > 0) || !(l_max > 0)) throw ValidationError("learning-rate bounds must be positive");
  if (l_min > l_max) throw ValidationError("l_min must not exceed l_max");
  if (batches == 0) throw ValidationError("schedule needs at least one batch per epoch");
}

double CosineBatchSchedule::rate(std::size_t k) const {
  if (k > batches) {
    throw ValidationError("batch index " + std::to_string(k) + " outside [0, " + std::to_string(batches) + "]");
  }
  // (l_max - l_min) + l_min need not round back to l_max; pin both ends.
  if (k == 0) return l_max;
  if (k == batches) return l_min;
  const double phase = static_cast<double>(k) * std::numbers::pi / static_cast<double>(batches);
  return 0.5 * (l_max - l_min) * (std::cos(phase) + 1.0) + l_min;
}

std::size_t batches_per_epoch(std::size_t examples, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  return (examples + batch_size - 1) / batch_size;
}

void run_sgd(std::span<double> parameters, std::size_t example_count, const TrainConfig& config,
             const BatchGradientFn& gradient, const StepObserver& observer) {
  if (example_count == 0) throw ValidationError("cannot train on an empty dataset");
  if (config.epochs == 0) throw ValidationError("epochs must be positive");
  if (config.batch_size == 0 || config.batch_size > example_count) {
    throw ValidationError("batch size must be in [1, training-set size]");
  }
  config.schedule.validate();
  const std::size_t n_batches = batches_per_epoch(example_count, config.batch_size);
  if (config.schedule.batches != n_batches) {
    throw ValidationError("schedule expects " + std::to_string(config.schedule.batches) +
                          " batches per epoch but the data yields " + std::to_string(n_batches));
  }

  std::vector<std::size_t> order(example_count);
  std::vector<double> grads(parameters.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k = 0; k < n_batches; ++k) {
      const std::size_t begin = k * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, example_count);
      std::fill(grads.begin(), grads.end(), 0.0);
      const double loss = gradient(epoch, std::span<const std::size_t>(order).subspan(begin, end - begin), grads);
      const double lr = config.schedule.rate(k);
      for (std::size_t i = 0; i < parameters.size(); ++i) parameters[i] -= lr * grads[i];
      if (observer) observer(StepInfo{epoch, k, lr, loss});
    }
  }
}

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows) {
  Shape shape = source.shape;
  shape.front() = rows.size();
  Tensor out(shape);
  const std::size_t width = source.row_size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = source.row(rows[i]);
    std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return out;
}

void sgd_train(Network& network, const Dataset& data, const TrainConfig& config, const StepObserver& observer) {
  if (data.inputs.rows() != data.labels.size()) throw ShapeError("dataset inputs and labels differ in length");
  std::vector<ClassIndex> labels;
  run_sgd(
      network.parameters(), data.labels.size(), config,
      [&](std::size_t, std::span<const std::size_t> rows, std::span<double> grads) {
        const Tensor batch = gather_rows(data.inputs, rows);
        labels.clear();
        for (auto r : rows) labels.push_back(data.labels[r]);
        auto result = network.backward(batch, labels);
        std::copy(result.gradients.begin(), result.gradients.end(), grads.begin());
        return result.loss;
      },
      observer);
}

double accuracy(const Network& network, const Dataset& data) {
  if (data.labels.empty()) return 0.0;
  constexpr std::size_t kChunk = 256;
  std::size_t hits = 0;
  std::vector<std::size_t> rows;
  for (std::size_t begin = 0; begin < data.labels.size(); begin += kChunk) {
    rows.clear();
    for (std::size_t r = begin; r < std::min(begin + kChunk, data.labels.size()); ++r) rows.push_back(r);
    const Tensor probs = network.predict(gather_rows(data.inputs, rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (argmax_class(probs.row(i)) == data.labels[rows[i]]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.labels.size());
}

}  // namespace mmdoc::nn
