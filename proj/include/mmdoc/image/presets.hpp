#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmdoc/nn/spec.hpp"

namespace mmdoc::image {

enum class CnnPreset { MiniAlexNetBN, MiniVGG };

std::string to_string(CnnPreset preset);
/// Accepts "mini_alexnet_bn" and "mini_vgg". Throws ValidationError otherwise.
CnnPreset parse_preset(std::string_view name);

struct PresetWidths {
  std::vector<std::size_t> conv;  // MiniAlexNetBN: 3 entries, MiniVGG: 4
  std::size_t dense1 = 128;
  std::size_t dense2 = 64;

  bool operator==(const PresetWidths&) const = default;
};

PresetWidths default_widths(CnnPreset preset);

/// MiniAlexNetBN: Conv(k5 s2 p2) BN ReLU MaxPool, then 2 x [Conv(k3 p1) BN
/// ReLU MaxPool], Flatten, Dense ReLU Dense ReLU, Dense(c), Softmax.
/// MiniVGG: 4 x [Conv(k3 p1) ReLU Conv(k3 p1) ReLU MaxPool], then the same head.
/// Throws ValidationError if the pooling stack exhausts the input side.
nn::NetworkSpec expand_preset(CnnPreset preset, std::size_t side, std::size_t classes,
                              const PresetWidths& widths, std::uint64_t seed = 0);
nn::NetworkSpec expand_preset(CnnPreset preset, std::size_t side, std::size_t classes, std::uint64_t seed = 0);

}  // namespace mmdoc::image
