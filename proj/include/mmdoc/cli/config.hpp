#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "mmdoc/fusion/meta.hpp"
#include "mmdoc/image/image_model.hpp"
#include "mmdoc/ingest/ocr.hpp"
#include "mmdoc/text/text_model.hpp"

namespace mmdoc::cli {

/// Everything one run needs. Relative paths in the file are resolved against
/// the config file's directory; the run seed is copied into every stochastic
/// component (text/image init and shuffling, augmentation, fold assignment).
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  text::TextModelOptions text;
  std::vector<std::size_t> vocab_sizes;  // BoW sweep; text.vocab_size is the first entry
  image::ImageModelOptions image;
  fusion::FusionConfig fusion;
  ingest::OcrConfig ocr;
};

struct Overrides {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

/// Parses and validates every section. Unknown keys, wrong types and bad
/// values raise ValidationError; nothing is written.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// The effective configuration, paths absolute.
nlohmann::json to_json(const RunConfig& config);

}  // namespace mmdoc::cli
