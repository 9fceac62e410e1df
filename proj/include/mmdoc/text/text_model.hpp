#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/core/types.hpp"
#include "mmdoc/nn/model_io.hpp"
#include "mmdoc/nn/network.hpp"
#include "mmdoc/nn/train.hpp"
#include "mmdoc/text/bow.hpp"

namespace mmdoc::text {

struct TextModelOptions {
  std::size_t vocab_size = 10000;  // K
  std::size_t hidden_width = 256;
  nn::TrainConfig train{.epochs = 10,
                        .batch_size = 32,
                        .schedule = {nn::kTextMaxRate, nn::kMinRate, 1},
                        .seed = 0};
};

nlohmann::json to_json(const TextModelOptions& options);
TextModelOptions text_options_from_json(const nlohmann::json& j);

/// K -> Dense(hidden) -> ReLU -> Dense(c) -> Softmax.
nn::NetworkSpec text_network_spec(std::size_t vocab_size, std::size_t hidden_width, std::size_t classes,
                                  std::uint64_t seed);

/// Reads the record's text file. Throws ValidationError when the record has
/// no text path, IoError when the file cannot be read.
std::string read_record_text(const DatasetManifest& manifest, const PageRecord& record);

/// Builds the vocabulary from the train split only and trains the BoW
/// network. `options.train.schedule.batches` is replaced by the actual number
/// of batches per epoch. The artifact embeds the vocabulary.
nn::ModelArtifact train_text_model(const DatasetManifest& manifest, const TextModelOptions& options);

/// Ready-to-use text classifier around an artifact.
class TextModel {
 public:
  /// Throws ModalityError unless the artifact is a text model.
  explicit TextModel(const nn::ModelArtifact& artifact);

  ClassScores predict(std::string_view text) const;
  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::size_t classes() const { return network_.classes(); }

 private:
  Vocabulary vocabulary_;
  nn::Network network_;
};

ClassScores predict_text(const nn::ModelArtifact& artifact, std::string_view text);

}  // namespace mmdoc::text
