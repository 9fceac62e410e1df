#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mmdoc/core/types.hpp"
#include "mmdoc/nn/network.hpp"
#include "mmdoc/nn/tensor.hpp"

namespace mmdoc::nn {

/// Per-batch cosine annealing restarted at every epoch:
///
///   rate(k) = 0.5 * (l_max - l_min) * (cos(k * pi / N) + 1) + l_min
///
/// with k the 0-based batch index inside the epoch and N the number of
/// batches per epoch.
struct CosineBatchSchedule {
  double l_max = 0.01;
  double l_min = 1e-6;
  std::size_t batches = 1;  // N

  void validate() const;
  /// Throws ValidationError for k outside [0, N].
  double rate(std::size_t k) const;
};

/// Learning-rate bounds used for image models.
inline constexpr double kImageMaxRate = 0.002;
/// Learning-rate bounds used for bag-of-words text models.
inline constexpr double kTextMaxRate = 0.01;
inline constexpr double kMinRate = 1e-6;

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  CosineBatchSchedule schedule;
  std::uint64_t seed = 0;
};

/// Number of batches an epoch over `examples` items takes (last batch may be
/// short).
std::size_t batches_per_epoch(std::size_t examples, std::size_t batch_size);

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t batch = 0;  // k within the epoch
  double learning_rate = 0;
  double loss = 0;
};
using StepObserver = std::function<void(const StepInfo&)>;

/// Computes the mean loss of one batch and writes d loss / d params into
/// `gradients` (same length as the parameter array).
using BatchGradientFn =
    std::function<double(std::size_t epoch, std::span<const std::size_t> examples, std::span<double> gradients)>;

/// Plain SGD (no momentum) over `example_count` items. Each epoch visits the
/// items in an order shuffled from (config.seed, epoch), chunks them into
/// batches, and batch k steps with schedule.rate(k).
void run_sgd(std::span<double> parameters, std::size_t example_count, const TrainConfig& config,
             const BatchGradientFn& gradient, const StepObserver& observer = {});

/// In-memory supervised dataset: `inputs` has a leading example dimension.
struct Dataset {
  Tensor inputs;
  std::vector<ClassIndex> labels;
};

/// Gathers rows of a batched tensor.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows);

/// Trains `network` in place. Requires config.schedule.batches to equal the
/// number of batches per epoch.
void sgd_train(Network& network, const Dataset& data, const TrainConfig& config,
               const StepObserver& observer = {});

/// Fraction of rows whose argmax matches the label.
double accuracy(const Network& network, const Dataset& data);

}  // namespace mmdoc::nn
