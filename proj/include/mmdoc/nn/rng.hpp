#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mmdoc::nn {

/// Deterministic random source used everywhere randomness is consumed.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard.
/// The distributions are implemented here rather than through <random>'s
/// distribution classes, whose algorithms are implementation-defined, so a
/// seed reproduces bit-identical draws on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent sub-seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mmdoc::nn
