#include "mmdoc/fusion/meta.hpp"

#include <map>

#include "mmdoc/core/error.hpp"
#include "mmdoc/image/image_model.hpp"
#include "mmdoc/nn/rng.hpp"
#include "mmdoc/text/text_model.hpp"

namespace mmdoc::fusion {

void FusionConfig::validate() const {
  boost_params().validate();
  if (meta_source == MetaSource::OutOfFold && oof_folds < 2) throw ValidationError("oof_folds must be at least 2");
}

nlohmann::json to_json(const FusionConfig& c) {
  return {{"max_depth", c.max_depth},
          {"rounds", c.rounds},
          {"shrinkage", c.shrinkage},
          {"min_samples_leaf", c.min_samples_leaf},
          {"components", c.components},
          {"oof_folds", c.oof_folds},
          {"meta_source", c.meta_source == MetaSource::OutOfFold ? "out_of_fold" : "validation"},
          {"allow_single_component", c.allow_single_component},
          {"seed", c.seed}};
}

FusionConfig fusion_config_from_json(const nlohmann::json& j) {
  FusionConfig c;
  c.max_depth = j.value("max_depth", c.max_depth);
  c.rounds = j.value("rounds", c.rounds);
  c.shrinkage = j.value("shrinkage", c.shrinkage);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.components = j.value("components", c.components);
  c.oof_folds = j.value("oof_folds", c.oof_folds);
  const std::string source = j.value("meta_source", std::string("out_of_fold"));
  if (source == "out_of_fold") {
    c.meta_source = MetaSource::OutOfFold;
  } else if (source == "validation") {
    c.meta_source = MetaSource::Validation;
  } else {
    throw ValidationError("meta_source must be 'out_of_fold' or 'validation'");
  }
  c.allow_single_component = j.value("allow_single_component", c.allow_single_component);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<double> concat_scores(std::span<const ClassScores> scores) {
  if (scores.empty()) throw ShapeError("no component scores to concatenate");
  std::vector<double> out;
  out.reserve(scores.size() * scores[0].size());
  for (const auto& s : scores) {
    if (s.size() != scores[0].size()) {
      throw ShapeError("component scores disagree on class count: " + std::to_string(scores[0].size()) + " vs " +
                       std::to_string(s.size()));
    }
    out.insert(out.end(), s.values().begin(), s.values().end());
  }
  return out;
}

struct Component::Model {
  std::unique_ptr<text::TextModel> text;
  std::unique_ptr<image::ImageModel> image;
};

Component::Component(std::string name, nn::ModelArtifact artifact)
    : name_(std::move(name)), artifact_(std::move(artifact)) {
  modality_ = artifact_.metadata.value("modality", "");
  auto model = std::make_shared<Model>();
  if (modality_ == "text") {
    model->text = std::make_unique<text::TextModel>(artifact_);
  } else if (modality_ == "image") {
    model->image = std::make_unique<image::ImageModel>(artifact_);
  } else {
    throw ModalityError("component '" + name_ + "' has unknown modality '" + modality_ + "'");
  }
  model_ = std::move(model);
}

std::size_t Component::classes() const { return model_->text ? model_->text->classes() : model_->image->classes(); }

std::vector<ClassScores> Component::predict(const DatasetManifest& manifest,
                                            std::span<const PageRecord> records) const {
  std::vector<ClassScores> out;
  out.reserve(records.size());
  if (model_->text) {
    for (const auto& r : records) out.push_back(model_->text->predict(text::read_record_text(manifest, r)));
    return out;
  }
  constexpr std::size_t kChunk = 256;
  std::vector<nn::Tensor> inputs;
  for (std::size_t begin = 0; begin < records.size(); begin += kChunk) {
    inputs.clear();
    for (std::size_t i = begin; i < std::min(begin + kChunk, records.size()); ++i) {
      inputs.push_back(image::preprocess(image::load_record_image(manifest, records[i]), model_->image->side()));
    }
    for (auto& s : model_->image->predict(inputs)) out.push_back(std::move(s));
  }
  return out;
}

Component Component::refit(const DatasetManifest& manifest) const {
  const auto& options = artifact_.metadata.at("options");
  if (modality_ == "text") {
    return Component(name_, text::train_text_model(manifest, text::text_options_from_json(options)));
  }
  return Component(name_, image::train_image_model(manifest, image::image_options_from_json(options)));
}

FeatureMatrix component_features(std::span<const Component> components, const DatasetManifest& manifest,
                                 std::span<const PageRecord> records) {
  if (components.empty()) throw ValidationError("fusion needs at least one component");
  const std::size_t c = components[0].classes();
  FeatureMatrix x(records.size(), components.size() * c);
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (components[j].classes() != c) {
      throw ShapeError("component '" + components[j].name() + "' has " + std::to_string(components[j].classes()) +
                       " classes, expected " + std::to_string(c));
    }
    const auto scores = components[j].predict(manifest, records);
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::copy(scores[i].values().begin(), scores[i].values().end(), x.row(i).begin() + j * c);
    }
  }
  return x;
}

std::vector<std::size_t> stratified_folds(const DatasetManifest& manifest, std::size_t folds, std::uint64_t seed) {
  std::map<ClassIndex, std::vector<std::size_t>> by_class;
  std::size_t n = 0;
  for (const auto& r : manifest.records) {
    if (r.split == Split::Train) by_class[r.label].push_back(n++);
  }
  std::vector<std::size_t> fold(n);
  for (auto& [label, rows] : by_class) {
    if (rows.size() < folds) {
      throw ValidationError("class '" + manifest.label_set.name(label) + "' has " + std::to_string(rows.size()) +
                            " training records, fewer than " + std::to_string(folds) + " folds");
    }
    nn::Rng rng(nn::mix_seed(seed, label));
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % folds;
  }
  return fold;
}

namespace {

void check_components(std::span<const Component> components, const FusionConfig& config) {
  if (components.empty() || (components.size() == 1 && !config.allow_single_component)) {
    throw ValidationError("fusion needs at least 2 components (or allow_single_component)");
  }
  if (!config.components.empty()) {
    bool same = config.components.size() == components.size();
    for (std::size_t i = 0; same && i < components.size(); ++i) same = config.components[i] == components[i].name();
    if (!same) throw ValidationError("component order does not match the configured order");
  }
}

}  // namespace

MetaTrainingSet build_meta_training_set(std::span<const Component> components, const DatasetManifest& manifest,
                                        const FusionConfig& config) {
  config.validate();
  check_components(components, config);
  MetaTrainingSet set;
  if (config.meta_source == MetaSource::Validation) {
    const auto val = filter_split(manifest, Split::Validation);
    if (val.records.empty()) throw ValidationError("meta_source 'validation' needs a non-empty validation split");
    set.features = component_features(components, manifest, val.records);
    for (const auto& r : val.records) set.labels.push_back(r.label);
    return set;
  }

  const auto train = filter_split(manifest, Split::Train);
  if (train.records.empty()) throw ValidationError("meta-classifier needs a non-empty train split");
  const auto fold = stratified_folds(manifest, config.oof_folds, config.seed);
  const std::size_t c = components[0].classes();
  set.features = FeatureMatrix(train.records.size(), components.size() * c);
  for (const auto& r : train.records) set.labels.push_back(r.label);

  for (std::size_t k = 0; k < config.oof_folds; ++k) {
    DatasetManifest fit = train;
    fit.records.clear();
    std::vector<PageRecord> held;
    std::vector<std::size_t> held_rows;
    for (std::size_t i = 0; i < train.records.size(); ++i) {
      if (fold[i] == k) {
        held.push_back(train.records[i]);
        held_rows.push_back(i);
      } else {
        fit.records.push_back(train.records[i]);
      }
    }
    std::vector<Component> refitted;
    for (const auto& comp : components) refitted.push_back(comp.refit(fit));
    const auto x = component_features(refitted, manifest, held);
    for (std::size_t i = 0; i < held_rows.size(); ++i) {
      std::copy(x.row(i).begin(), x.row(i).end(), set.features.row(held_rows[i]).begin());
    }
  }
  return set;
}

BoostedForest train_meta(std::span<const Component> components, const DatasetManifest& manifest,
                         const FusionConfig& config, std::vector<double>* loss_trace) {
  const auto set = build_meta_training_set(components, manifest, config);
  auto forest = fit_forest(set.features, set.labels, manifest.label_set.size(), config.boost_params(), loss_trace);
  for (const auto& comp : components) forest.components.push_back(comp.name());
  return forest;
}

ClassScores predict_fused(const BoostedForest& forest, std::span<const ClassScores> component_scores) {
  if (!forest.components.empty() && component_scores.size() != forest.components.size()) {
    throw ShapeError("forest expects " + std::to_string(forest.components.size()) + " components, got " +
                     std::to_string(component_scores.size()));
  }
  for (const auto& s : component_scores) {
    if (s.size() != forest.classes) throw ShapeError("component scores do not match the forest's class count");
  }
  return forest.predict(concat_scores(component_scores));
}

std::vector<ClassScores> predict_fused(const BoostedForest& forest, std::span<const Component> components,
                                       const DatasetManifest& manifest, std::span<const PageRecord> records) {
  if (!forest.components.empty()) {
    bool same = forest.components.size() == components.size();
    for (std::size_t i = 0; same && i < components.size(); ++i) same = forest.components[i] == components[i].name();
    if (!same) throw ValidationError("components do not match the forest's component order");
  }
  const auto x = component_features(components, manifest, records);
  if (x.cols != forest.features) throw ShapeError("fusion feature width does not match the forest");
  std::vector<ClassScores> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(forest.predict(x.row(i)));
  return out;
}

}  // namespace mmdoc::fusion
