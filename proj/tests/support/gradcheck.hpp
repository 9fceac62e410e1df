#pragma once

// Central finite-difference oracle for the hand-derived backward passes.
// The loss is recomputed from the forward probabilities only, so the check
// never goes through the fused softmax/cross-entropy gradient it verifies.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mmdoc/nn/network.hpp"

namespace mmdoc::testing {

inline double forward_loss(nn::Network& net, const nn::Tensor& batch, std::span<const ClassIndex> labels) {
  const nn::Tensor probs = net.forward(batch, nn::Mode::Training);
  double loss = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) loss -= std::log(probs.row(r)[labels[r]]);
  return loss / static_cast<double>(probs.rows());
}

// |a - n| / max(|a|, |n|, floor). A central difference of an O(1) loss carries
// rounding noise of about eps / h ~ 1e-11, so gradients that are exactly zero
// (a bias feeding straight into BatchNorm) come back as +-1e-11. The 1e-6
// floor keeps that noise at <= 1e-5 relative instead of dividing by ~0.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  double max_param_error = 0;
  double max_input_error = 0;
  std::size_t checked = 0;
};

inline GradCheckResult check_gradients(nn::Network& net, const nn::Tensor& batch, std::span<const ClassIndex> labels,
                                       double h = 1e-5) {
  const auto analytic = net.backward(batch, labels, /*need_input_gradient=*/true);
  GradCheckResult result;
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = forward_loss(net, batch, labels);
    params[i] = saved - h;
    const double down = forward_loss(net, batch, labels);
    params[i] = saved;
    const double numeric = (up - down) / (2 * h);
    result.max_param_error = std::max(result.max_param_error, relative_error(analytic.gradients[i], numeric));
    ++result.checked;
  }
  nn::Tensor probe = batch;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + h;
    const double up = forward_loss(net, probe, labels);
    probe.data[i] = saved - h;
    const double down = forward_loss(net, probe, labels);
    probe.data[i] = saved;
    const double numeric = (up - down) / (2 * h);
    result.max_input_error =
        std::max(result.max_input_error, relative_error(analytic.input_gradient.data[i], numeric));
    ++result.checked;
  }
  return result;
}

}  // namespace mmdoc::testing
