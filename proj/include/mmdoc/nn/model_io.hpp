#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdoc/nn/network.hpp"
#include "mmdoc/nn/spec.hpp"

namespace mmdoc::nn {

/// A trained network plus whatever a predictor needs to use it.
///
/// `metadata` records the modality and training recipe; `vocabulary` is
/// non-empty only for text models.
struct ModelArtifact {
  NetworkSpec spec;
  std::vector<double> parameters;
  std::vector<double> buffers;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> vocabulary;

  static ModelArtifact capture(const Network& network);
  /// Rebuilds the network and copies the stored parameters in.
  Network instantiate() const;

  bool operator==(const ModelArtifact&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary layout, all integers little-endian:
///
///   8 bytes   magic "MMDOCNN\0"
///   u32       format version
///   u64 n, n bytes   UTF-8 JSON {"network": ..., "metadata": ...}
///   u64 n, n bytes   vocabulary, one token per line ('\n' terminated)
///   u64 p, p * f64   parameters in layer order
///   u64 b, b * f64   buffers (BatchNorm running mean then variance)
std::string serialize_model(const ModelArtifact& artifact);
ModelArtifact deserialize_model(const std::string& bytes);

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace mmdoc::nn
