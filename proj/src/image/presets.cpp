#include "mmdoc/image/presets.hpp"

#include "mmdoc/core/error.hpp"

namespace mmdoc::image {

std::string to_string(CnnPreset preset) {
  return preset == CnnPreset::MiniAlexNetBN ? "mini_alexnet_bn" : "mini_vgg";
}

CnnPreset parse_preset(std::string_view name) {
  if (name == "mini_alexnet_bn") return CnnPreset::MiniAlexNetBN;
  if (name == "mini_vgg") return CnnPreset::MiniVGG;
  throw ValidationError("unknown CNN preset '" + std::string(name) + "' (expected mini_alexnet_bn or mini_vgg)");
}

PresetWidths default_widths(CnnPreset preset) {
  if (preset == CnnPreset::MiniAlexNetBN) return {{16, 32, 64}, 128, 64};
  return {{8, 16, 32, 64}, 128, 64};
}

nn::NetworkSpec expand_preset(CnnPreset preset, std::size_t side, std::size_t classes, const PresetWidths& widths,
                              std::uint64_t seed) {
  const std::size_t blocks = preset == CnnPreset::MiniAlexNetBN ? 3 : 4;
  if (widths.conv.size() != blocks) {
    throw ValidationError(to_string(preset) + " needs " + std::to_string(blocks) + " conv widths");
  }
  for (auto w : widths.conv) {
    if (w == 0) throw ValidationError("conv widths must be positive");
  }
  if (widths.dense1 == 0 || widths.dense2 == 0) throw ValidationError("dense widths must be positive");
  if (classes < 2) throw ValidationError("a classifier needs at least 2 classes");

  nn::NetworkSpec spec{{3, side, side}, {}, seed};
  auto& L = spec.layers;
  std::size_t in = 3;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t out = widths.conv[b];
    if (preset == CnnPreset::MiniAlexNetBN) {
      L.emplace_back(b == 0 ? nn::Conv2DSpec{in, out, 5, 2, 2} : nn::Conv2DSpec{in, out, 3, 1, 1});
      L.emplace_back(nn::BatchNormSpec{out});
      L.emplace_back(nn::ReLUSpec{});
    } else {
      L.emplace_back(nn::Conv2DSpec{in, out, 3, 1, 1});
      L.emplace_back(nn::ReLUSpec{});
      L.emplace_back(nn::Conv2DSpec{out, out, 3, 1, 1});
      L.emplace_back(nn::ReLUSpec{});
    }
    L.emplace_back(nn::MaxPool2DSpec{2, 2});
    in = out;
  }
  L.emplace_back(nn::FlattenSpec{});

  std::size_t extent = side;
  for (std::size_t b = 0; b < blocks; ++b) {
    if (preset == CnnPreset::MiniAlexNetBN && b == 0) {
      extent = extent == 0 ? 0 : (extent + 4 - 5) / 2 + 1;
    }
    if (extent < 2) {
      throw ValidationError("side " + std::to_string(side) + " is too small for " + to_string(preset) +
                            ": pooling block " + std::to_string(b + 1) + " has no spatial extent left");
    }
    extent /= 2;
  }
  const std::size_t flat = widths.conv.back() * extent * extent;
  L.emplace_back(nn::DenseSpec{flat, widths.dense1});
  L.emplace_back(nn::ReLUSpec{});
  L.emplace_back(nn::DenseSpec{widths.dense1, widths.dense2});
  L.emplace_back(nn::ReLUSpec{});
  L.emplace_back(nn::DenseSpec{widths.dense2, classes});
  L.emplace_back(nn::SoftmaxSpec{});
  nn::infer_shapes(spec);
  return spec;
}

nn::NetworkSpec expand_preset(CnnPreset preset, std::size_t side, std::size_t classes, std::uint64_t seed) {
  return expand_preset(preset, side, classes, default_widths(preset), seed);
}

}  // namespace mmdoc::image
