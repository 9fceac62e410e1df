#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/core/types.hpp"
#include "mmdoc/image/page_image.hpp"
#include "mmdoc/image/presets.hpp"
#include "mmdoc/image/transform.hpp"
#include "mmdoc/nn/model_io.hpp"
#include "mmdoc/nn/network.hpp"
#include "mmdoc/nn/train.hpp"

namespace mmdoc::image {

struct ImageModelOptions {
  CnnPreset preset = CnnPreset::MiniAlexNetBN;
  std::size_t side = kDefaultSide;
  PresetWidths widths = default_widths(CnnPreset::MiniAlexNetBN);
  AugmentationPolicy augmentation;
  nn::TrainConfig train{.epochs = 10,
                        .batch_size = 32,
                        .schedule = {nn::kImageMaxRate, nn::kMinRate, 1},
                        .seed = 0};
};

nlohmann::json to_json(const ImageModelOptions& options);
/// Missing keys keep their defaults; widths default to the chosen preset's.
ImageModelOptions image_options_from_json(const nlohmann::json& j);

/// Resolves and decodes the record's image. Throws ValidationError when the
/// record has no image path.
PageImage load_record_image(const DatasetManifest& manifest, const PageRecord& record);

/// Trains on the train split. Every epoch re-augments each training image
/// with a generator seeded from (augmentation.seed, epoch, record index);
/// with an identity policy the preprocessed tensors are computed once.
/// `options.train.schedule.batches` is replaced by the actual batch count.
nn::ModelArtifact train_image_model(const DatasetManifest& manifest, const ImageModelOptions& options,
                                    const nn::StepObserver& observer = {});

class ImageModel {
 public:
  /// Throws ModalityError unless the artifact is an image model.
  explicit ImageModel(const nn::ModelArtifact& artifact);

  std::size_t side() const { return side_; }
  std::size_t classes() const { return network_.classes(); }

  ClassScores predict(const PageImage& image) const;
  ClassScores predict(const std::filesystem::path& path) const;
  /// Batched inference over already preprocessed tensors.
  std::vector<ClassScores> predict(const std::vector<nn::Tensor>& inputs) const;

 private:
  std::size_t side_ = 0;
  nn::Network network_;
};

ClassScores predict_image(const nn::ModelArtifact& artifact, const std::filesystem::path& path);

}  // namespace mmdoc::image
