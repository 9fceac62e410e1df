#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmdoc/core/error.hpp"

namespace mmdoc::nn {

namespace {

void glorot(std::span<double> weights, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : weights) w = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------

class DenseLayer final : public Layer {
 public:
  explicit DenseLayer(DenseSpec spec) : spec_(spec) {}

  std::size_t parameter_count() const override { return spec_.in_dim * spec_.out_dim + spec_.out_dim; }

  void initialize(std::span<double> params, std::span<double>, Rng& rng) const override {
    glorot(params.first(spec_.in_dim * spec_.out_dim), spec_.in_dim, spec_.out_dim, rng);
    std::fill(params.begin() + static_cast<std::ptrdiff_t>(spec_.in_dim * spec_.out_dim), params.end(), 0.0);
  }

  // Weights are stored [in][out] so a zero input row (common for sparse
  // bag-of-words vectors) can be skipped as a whole.
  Tensor forward(const Tensor& x, std::span<const double> params, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    const std::size_t n = x.rows(), in = spec_.in_dim, out = spec_.out_dim;
    const double* w = params.data();
    const double* b = params.data() + in * out;
    Tensor y(Shape{n, out});
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * in;
      double* yr = y.data.data() + r * out;
      std::copy(b, b + out, yr);
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        const double* wi = w + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
      }
    }
    if (cache) cache->input = x;
    return y;
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double> params,
                  std::span<double> grad_params, bool need_input_grad) const override {
    const std::size_t n = g.rows(), in = spec_.in_dim, out = spec_.out_dim;
    const Tensor& x = cache.input;
    double* gw = grad_params.data();
    double* gb = grad_params.data() + in * out;
    for (std::size_t r = 0; r < n; ++r) {
      const double* xr = x.data.data() + r * in;
      const double* gr = g.data.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) gb[o] += gr[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        double* gwi = gw + i * out;
        for (std::size_t o = 0; o < out; ++o) gwi[o] += xi * gr[o];
      }
    }
    if (!need_input_grad) return {};
    Tensor dx(x.shape);
    const double* w = params.data();
    for (std::size_t r = 0; r < n; ++r) {
      const double* gr = g.data.data() + r * out;
      double* dxr = dx.data.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        const double* wi = w + i * out;
        double acc = 0;
        for (std::size_t o = 0; o < out; ++o) acc += wi[o] * gr[o];
        dxr[i] = acc;
      }
    }
    return dx;
  }

 private:
  DenseSpec spec_;
};

// ---------------------------------------------------------------------------

class Conv2DLayer final : public Layer {
 public:
  Conv2DLayer(Conv2DSpec spec, const Shape& in) : spec_(spec), h_(in[1]), w_(in[2]) {
    oh_ = (h_ + 2 * spec_.padding - spec_.kernel) / spec_.stride + 1;
    ow_ = (w_ + 2 * spec_.padding - spec_.kernel) / spec_.stride + 1;
  }

  std::size_t weight_count() const {
    return spec_.out_channels * spec_.in_channels * spec_.kernel * spec_.kernel;
  }
  std::size_t parameter_count() const override { return weight_count() + spec_.out_channels; }

  void initialize(std::span<double> params, std::span<double>, Rng& rng) const override {
    const std::size_t k2 = spec_.kernel * spec_.kernel;
    glorot(params.first(weight_count()), spec_.in_channels * k2, spec_.out_channels * k2, rng);
    std::fill(params.begin() + static_cast<std::ptrdiff_t>(weight_count()), params.end(), 0.0);
  }

  Tensor forward(const Tensor& x, std::span<const double> params, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    const std::size_t n = x.rows();
    Tensor y(Shape{n, spec_.out_channels, oh_, ow_});
    const double* bias = params.data() + weight_count();
    for (std::size_t b = 0; b < n; ++b) {
      const double* xb = x.data.data() + b * spec_.in_channels * h_ * w_;
      double* yb = y.data.data() + b * spec_.out_channels * oh_ * ow_;
      for (std::size_t oc = 0; oc < spec_.out_channels; ++oc) {
        double* plane = yb + oc * oh_ * ow_;
        std::fill(plane, plane + oh_ * ow_, bias[oc]);
        for_each_tap(oc, params, [&](std::size_t ic, std::size_t kh, std::size_t kw, double wt) {
          const double* xin = xb + ic * h_ * w_;
          sweep(kh, kw, [&](std::size_t o_idx, std::size_t i_idx) { plane[o_idx] += wt * xin[i_idx]; });
        });
      }
    }
    if (cache) cache->input = x;
    return y;
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double> params,
                  std::span<double> grad_params, bool need_input_grad) const override {
    const Tensor& x = cache.input;
    const std::size_t n = g.rows();
    const std::size_t k = spec_.kernel;
    Tensor dx;
    if (need_input_grad) dx = Tensor(x.shape);
    double* gbias = grad_params.data() + weight_count();
    for (std::size_t b = 0; b < n; ++b) {
      const double* xb = x.data.data() + b * spec_.in_channels * h_ * w_;
      const double* gb = g.data.data() + b * spec_.out_channels * oh_ * ow_;
      double* dxb = need_input_grad ? dx.data.data() + b * spec_.in_channels * h_ * w_ : nullptr;
      for (std::size_t oc = 0; oc < spec_.out_channels; ++oc) {
        const double* gplane = gb + oc * oh_ * ow_;
        for (std::size_t i = 0; i < oh_ * ow_; ++i) gbias[oc] += gplane[i];
        for (std::size_t ic = 0; ic < spec_.in_channels; ++ic) {
          const double* xin = xb + ic * h_ * w_;
          for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
              const std::size_t widx = ((oc * spec_.in_channels + ic) * k + kh) * k + kw;
              double acc = 0;
              sweep(kh, kw, [&](std::size_t o_idx, std::size_t i_idx) { acc += gplane[o_idx] * xin[i_idx]; });
              grad_params[widx] += acc;
              if (dxb) {
                const double wt = params[widx];
                double* dxin = dxb + ic * h_ * w_;
                sweep(kh, kw, [&](std::size_t o_idx, std::size_t i_idx) { dxin[i_idx] += wt * gplane[o_idx]; });
              }
            }
          }
        }
      }
    }
    return dx;
  }

 private:
  template <class F>
  void for_each_tap(std::size_t oc, std::span<const double> params, F&& f) const {
    const std::size_t k = spec_.kernel;
    for (std::size_t ic = 0; ic < spec_.in_channels; ++ic) {
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw) {
          f(ic, kh, kw, params[((oc * spec_.in_channels + ic) * k + kh) * k + kw]);
        }
      }
    }
  }

  // Visits every (output index, input index) pair touched by kernel tap
  // (kh, kw), skipping taps that land in the zero padding.
  template <class F>
  void sweep(std::size_t kh, std::size_t kw, F&& f) const {
    const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(spec_.stride);
    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(spec_.padding);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(h_), w = static_cast<std::ptrdiff_t>(w_);
    const std::ptrdiff_t dh = static_cast<std::ptrdiff_t>(kh) - p, dw = static_cast<std::ptrdiff_t>(kw) - p;
    // ow range with 0 <= ow*s + dw < w
    std::ptrdiff_t ow_lo = dw >= 0 ? 0 : (-dw + s - 1) / s;
    std::ptrdiff_t ow_hi = (w - 1 - dw) >= 0 ? (w - 1 - dw) / s : -1;
    ow_hi = std::min<std::ptrdiff_t>(ow_hi, static_cast<std::ptrdiff_t>(ow_) - 1);
    if (ow_lo > ow_hi) return;
    for (std::ptrdiff_t oh = 0; oh < static_cast<std::ptrdiff_t>(oh_); ++oh) {
      const std::ptrdiff_t ih = oh * s + dh;
      if (ih < 0 || ih >= h) continue;
      const std::size_t orow = static_cast<std::size_t>(oh) * ow_;
      const std::size_t irow = static_cast<std::size_t>(ih * w);
      for (std::ptrdiff_t ow = ow_lo; ow <= ow_hi; ++ow) {
        f(orow + static_cast<std::size_t>(ow), irow + static_cast<std::size_t>(ow * s + dw));
      }
    }
  }

  Conv2DSpec spec_;
  std::size_t h_, w_, oh_ = 0, ow_ = 0;
};

// ---------------------------------------------------------------------------

class MaxPoolLayer final : public Layer {
 public:
  MaxPoolLayer(MaxPool2DSpec spec, const Shape& in) : spec_(spec), c_(in[0]), h_(in[1]), w_(in[2]) {
    oh_ = (h_ - spec_.window) / spec_.stride + 1;
    ow_ = (w_ - spec_.window) / spec_.stride + 1;
  }

  Tensor forward(const Tensor& x, std::span<const double>, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    const std::size_t n = x.rows();
    Tensor y(Shape{n, c_, oh_, ow_});
    std::vector<std::size_t> argmax(y.size());
    std::size_t out_i = 0;
    for (std::size_t plane = 0; plane < n * c_; ++plane) {
      const std::size_t base = plane * h_ * w_;
      for (std::size_t oh = 0; oh < oh_; ++oh) {
        for (std::size_t ow = 0; ow < ow_; ++ow, ++out_i) {
          std::size_t best = base + oh * spec_.stride * w_ + ow * spec_.stride;
          for (std::size_t dh = 0; dh < spec_.window; ++dh) {
            for (std::size_t dw = 0; dw < spec_.window; ++dw) {
              const std::size_t idx = base + (oh * spec_.stride + dh) * w_ + ow * spec_.stride + dw;
              if (x.data[idx] > x.data[best]) best = idx;
            }
          }
          y.data[out_i] = x.data[best];
          argmax[out_i] = best;
        }
      }
    }
    if (cache) {
      cache->shape = x.shape;
      cache->index = std::move(argmax);
    }
    return y;
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double>, std::span<double>,
                  bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor dx(cache.shape);
    for (std::size_t i = 0; i < g.size(); ++i) dx.data[cache.index[i]] += g.data[i];
    return dx;
  }

 private:
  MaxPool2DSpec spec_;
  std::size_t c_, h_, w_, oh_ = 0, ow_ = 0;
};

// ---------------------------------------------------------------------------

// Normalizes per feature (flat input) or per channel (image input, statistics
// over batch and spatial positions).
class BatchNormLayer final : public Layer {
 public:
  BatchNormLayer(BatchNormSpec spec, const Shape& in) : spec_(spec), spatial_(in.size() == 3 ? in[1] * in[2] : 1) {}

  std::size_t parameter_count() const override { return 2 * spec_.num_features; }
  std::size_t buffer_count() const override { return 2 * spec_.num_features; }

  void initialize(std::span<double> params, std::span<double> buffers, Rng&) const override {
    const std::size_t c = spec_.num_features;
    std::fill_n(params.begin(), c, 1.0);
    std::fill(params.begin() + static_cast<std::ptrdiff_t>(c), params.end(), 0.0);
    std::fill_n(buffers.begin(), c, 0.0);
    std::fill(buffers.begin() + static_cast<std::ptrdiff_t>(c), buffers.end(), 1.0);
  }

  Tensor forward(const Tensor& x, std::span<const double> params, std::span<const double> buffers,
                 std::span<double> buffer_update, Mode mode, LayerCache* cache) const override {
    const std::size_t c = spec_.num_features, n = x.rows(), m = n * spatial_;
    const double* gamma = params.data();
    const double* beta = params.data() + c;
    Tensor y(x.shape);
    std::vector<double> xhat(mode == Mode::Training && cache ? x.size() : 0);
    std::vector<double> inv_std(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mean = 0, var = 0;
      if (mode == Mode::Training) {
        for_channel(n, ch, [&](std::size_t i) { mean += x.data[i]; });
        mean /= static_cast<double>(m);
        for_channel(n, ch, [&](std::size_t i) {
          const double d = x.data[i] - mean;
          var += d * d;
        });
        var /= static_cast<double>(m);
        if (!buffer_update.empty()) {
          buffer_update[ch] = spec_.momentum * buffer_update[ch] + (1 - spec_.momentum) * mean;
          buffer_update[c + ch] = spec_.momentum * buffer_update[c + ch] + (1 - spec_.momentum) * var;
        }
      } else {
        mean = buffers[ch];
        var = buffers[c + ch];
      }
      const double is = 1.0 / std::sqrt(var + spec_.epsilon);
      inv_std[ch] = is;
      for_channel(n, ch, [&](std::size_t i) {
        const double h = (x.data[i] - mean) * is;
        if (!xhat.empty()) xhat[i] = h;
        y.data[i] = gamma[ch] * h + beta[ch];
      });
    }
    if (cache) {
      cache->shape = x.shape;
      cache->aux = std::move(xhat);
      cache->aux2 = std::move(inv_std);
    }
    return y;
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double> params,
                  std::span<double> grad_params, bool need_input_grad) const override {
    const std::size_t c = spec_.num_features, n = g.rows(), m = n * spatial_;
    const auto& xhat = cache.aux;
    Tensor dx;
    if (need_input_grad) dx = Tensor(cache.shape);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum_g = 0, sum_gx = 0;
      for_channel(n, ch, [&](std::size_t i) {
        sum_g += g.data[i];
        sum_gx += g.data[i] * xhat[i];
      });
      grad_params[ch] += sum_gx;
      grad_params[c + ch] += sum_g;
      if (need_input_grad) {
        const double scale = params[ch] * cache.aux2[ch] / static_cast<double>(m);
        const double md = static_cast<double>(m);
        for_channel(n, ch, [&](std::size_t i) {
          dx.data[i] = scale * (md * g.data[i] - sum_g - xhat[i] * sum_gx);
        });
      }
    }
    return dx;
  }

 private:
  template <class F>
  void for_channel(std::size_t n, std::size_t ch, F&& f) const {
    const std::size_t c = spec_.num_features;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t base = (b * c + ch) * spatial_;
      for (std::size_t s = 0; s < spatial_; ++s) f(base + s);
    }
  }

  BatchNormSpec spec_;
  std::size_t spatial_;
};

// ---------------------------------------------------------------------------

class ReLULayer final : public Layer {
 public:
  Tensor forward(const Tensor& x, std::span<const double>, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : 0.0;
    if (cache) cache->input = x;
    return y;
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double>, std::span<double>,
                  bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor dx(g.shape);
    for (std::size_t i = 0; i < g.size(); ++i) dx.data[i] = cache.input.data[i] > 0 ? g.data[i] : 0.0;
    return dx;
  }
};

class FlattenLayer final : public Layer {
 public:
  Tensor forward(const Tensor& x, std::span<const double>, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    if (cache) cache->shape = x.shape;
    return Tensor(Shape{x.rows(), x.row_size()}, x.data);
  }

  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double>, std::span<double>,
                  bool need_input_grad) const override {
    if (!need_input_grad) return {};
    return Tensor(cache.shape, g.data);
  }
};

class SoftmaxLayer final : public Layer {
 public:
  Tensor forward(const Tensor& x, std::span<const double>, std::span<const double>, std::span<double>, Mode,
                 LayerCache* cache) const override {
    Tensor y(x.shape);
    const std::size_t width = x.row_size();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto in = x.row(r);
      auto out = y.row(r);
      const double peak = *std::max_element(in.begin(), in.end());
      double total = 0;
      for (std::size_t i = 0; i < width; ++i) {
        out[i] = std::exp(in[i] - peak);
        total += out[i];
      }
      for (double& v : out) v /= total;
    }
    if (cache) cache->input = x;
    return y;
  }

  // General Jacobian-vector product. Network::backward bypasses it and uses
  // the fused softmax/cross-entropy gradient instead.
  Tensor backward(const Tensor& g, const LayerCache& cache, std::span<const double>, std::span<double>,
                  bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor p = forward(cache.input, {}, {}, {}, Mode::Inference, nullptr);
    Tensor dx(g.shape);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto pr = p.row(r);
      auto gr = g.row(r);
      double dot = 0;
      for (std::size_t i = 0; i < pr.size(); ++i) dot += pr[i] * gr[i];
      auto dr = dx.row(r);
      for (std::size_t i = 0; i < pr.size(); ++i) dr[i] = pr[i] * (gr[i] - dot);
    }
    return dx;
  }
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::shared_ptr<const Layer> make_layer(const LayerSpec& spec, const Shape& input_shape) {
  return std::visit(overloaded{
                        [](const DenseSpec& s) -> std::shared_ptr<const Layer> { return std::make_shared<DenseLayer>(s); },
                        [&](const Conv2DSpec& s) -> std::shared_ptr<const Layer> {
                          return std::make_shared<Conv2DLayer>(s, input_shape);
                        },
                        [&](const MaxPool2DSpec& s) -> std::shared_ptr<const Layer> {
                          return std::make_shared<MaxPoolLayer>(s, input_shape);
                        },
                        [&](const BatchNormSpec& s) -> std::shared_ptr<const Layer> {
                          return std::make_shared<BatchNormLayer>(s, input_shape);
                        },
                        [](const ReLUSpec&) -> std::shared_ptr<const Layer> { return std::make_shared<ReLULayer>(); },
                        [](const FlattenSpec&) -> std::shared_ptr<const Layer> {
                          return std::make_shared<FlattenLayer>();
                        },
                        [](const SoftmaxSpec&) -> std::shared_ptr<const Layer> {
                          return std::make_shared<SoftmaxLayer>();
                        },
                    },
                    spec);
}

}  // namespace mmdoc::nn
