#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/core/types.hpp"
#include "mmdoc/fusion/forest.hpp"
#include "mmdoc/nn/model_io.hpp"

namespace mmdoc::fusion {

enum class MetaSource { OutOfFold, Validation };

struct FusionConfig {
  std::size_t max_depth = 3;
  std::size_t rounds = 100;
  double shrinkage = 0.1;
  std::size_t min_samples_leaf = 1;
  std::vector<std::string> components;  // expected order; empty accepts any
  std::size_t oof_folds = 5;
  MetaSource meta_source = MetaSource::OutOfFold;
  bool allow_single_component = false;
  std::uint64_t seed = 0;

  BoostParams boost_params() const { return {max_depth, rounds, shrinkage, min_samples_leaf}; }
  void validate() const;
};

nlohmann::json to_json(const FusionConfig& config);
FusionConfig fusion_config_from_json(const nlohmann::json& j);

/// Concatenates in the given order. Throws ShapeError on mixed class counts.
std::vector<double> concat_scores(std::span<const ClassScores> scores);

/// A trained text or image model taking part in fusion.
class Component {
 public:
  Component(std::string name, nn::ModelArtifact artifact);

  const std::string& name() const { return name_; }
  const std::string& modality() const { return modality_; }
  const nn::ModelArtifact& artifact() const { return artifact_; }
  std::size_t classes() const;

  /// Throws ValidationError/IoError/DecodeError for records it cannot score.
  std::vector<ClassScores> predict(const DatasetManifest& manifest, std::span<const PageRecord> records) const;

  /// Retrains from scratch with the options stored in the artifact, on the
  /// train split of `manifest`.
  Component refit(const DatasetManifest& manifest) const;

 private:
  struct Model;
  std::string name_;
  std::string modality_;
  nn::ModelArtifact artifact_;
  std::shared_ptr<const Model> model_;
};

/// Row i = concatenated component scores of records[i].
FeatureMatrix component_features(std::span<const Component> components, const DatasetManifest& manifest,
                                 std::span<const PageRecord> records);

/// Stratified fold index for every train-split record (in manifest order).
/// Throws ValidationError when a non-empty class has fewer records than folds.
std::vector<std::size_t> stratified_folds(const DatasetManifest& manifest, std::size_t folds, std::uint64_t seed);

struct MetaTrainingSet {
  FeatureMatrix features;
  std::vector<ClassIndex> labels;
};

/// Out-of-fold train-split features, or validation-split features.
MetaTrainingSet build_meta_training_set(std::span<const Component> components, const DatasetManifest& manifest,
                                        const FusionConfig& config);

BoostedForest train_meta(std::span<const Component> components, const DatasetManifest& manifest,
                         const FusionConfig& config, std::vector<double>* loss_trace = nullptr);

/// Throws ShapeError when the arity or class count disagrees with the forest.
ClassScores predict_fused(const BoostedForest& forest, std::span<const ClassScores> component_scores);

/// Scores every record with all components and the forest, in one pass.
std::vector<ClassScores> predict_fused(const BoostedForest& forest, std::span<const Component> components,
                                       const DatasetManifest& manifest, std::span<const PageRecord> records);

}  // namespace mmdoc::fusion
