#include "mmdoc/image/image_model.hpp"

#include <algorithm>

#include "mmdoc/core/error.hpp"

namespace mmdoc::image {

nlohmann::json to_json(const ImageModelOptions& o) {
  return {{"preset", to_string(o.preset)},
          {"side", o.side},
          {"conv_widths", o.widths.conv},
          {"dense_widths", {o.widths.dense1, o.widths.dense2}},
          {"augmentation", to_json(o.augmentation)},
          {"epochs", o.train.epochs},
          {"batch_size", o.train.batch_size},
          {"l_max", o.train.schedule.l_max},
          {"l_min", o.train.schedule.l_min},
          {"seed", o.train.seed}};
}

ImageModelOptions image_options_from_json(const nlohmann::json& j) {
  ImageModelOptions o;
  if (j.contains("preset")) o.preset = parse_preset(j.at("preset").get<std::string>());
  o.widths = default_widths(o.preset);
  o.side = j.value("side", o.side);
  if (j.contains("conv_widths")) o.widths.conv = j.at("conv_widths").get<std::vector<std::size_t>>();
  if (j.contains("dense_widths")) {
    const auto d = j.at("dense_widths").get<std::vector<std::size_t>>();
    if (d.size() != 2) throw ValidationError("dense_widths needs exactly 2 entries");
    o.widths.dense1 = d[0];
    o.widths.dense2 = d[1];
  }
  if (j.contains("augmentation")) o.augmentation = augmentation_from_json(j.at("augmentation"));
  o.train.epochs = j.value("epochs", o.train.epochs);
  o.train.batch_size = j.value("batch_size", o.train.batch_size);
  o.train.schedule.l_max = j.value("l_max", o.train.schedule.l_max);
  o.train.schedule.l_min = j.value("l_min", o.train.schedule.l_min);
  o.train.seed = j.value("seed", o.train.seed);
  return o;
}

PageImage load_record_image(const DatasetManifest& manifest, const PageRecord& record) {
  if (!record.image_path) throw ValidationError("record '" + record.id + "' has no image");
  try {
    return load_image(manifest.resolve(*record.image_path));
  } catch (const IoError& e) {
    throw IoError("record '" + record.id + "': " + e.what());
  }
}

nn::ModelArtifact train_image_model(const DatasetManifest& manifest, const ImageModelOptions& options,
                                    const nn::StepObserver& observer) {
  options.augmentation.validate();
  const auto train = filter_split(manifest, Split::Train);
  if (train.records.empty()) throw ValidationError("image model needs a non-empty train split");

  nn::Network net(expand_preset(options.preset, options.side, manifest.label_set.size(), options.widths,
                                options.train.seed));
  nn::TrainConfig cfg = options.train;
  cfg.schedule.batches = nn::batches_per_epoch(train.records.size(), cfg.batch_size);

  std::vector<PageImage> images;
  std::vector<ClassIndex> labels;
  images.reserve(train.records.size());
  for (const auto& r : train.records) {
    images.push_back(load_record_image(manifest, r));
    labels.push_back(r.label);
  }

  if (options.augmentation.is_identity()) {
    std::vector<nn::Tensor> inputs;
    inputs.reserve(images.size());
    for (const auto& img : images) inputs.push_back(preprocess(img, options.side));
    images.clear();
    nn::sgd_train(net, nn::Dataset{nn::stack(inputs), labels}, cfg, observer);
  } else {
    std::vector<nn::Tensor> batch;
    std::vector<ClassIndex> batch_labels;
    nn::run_sgd(
        net.parameters(), images.size(), cfg,
        [&](std::size_t epoch, std::span<const std::size_t> rows, std::span<double> grads) {
          batch.clear();
          batch_labels.clear();
          for (auto r : rows) {
            nn::Rng rng(nn::mix_seed(nn::mix_seed(options.augmentation.seed, epoch), r));
            batch.push_back(preprocess(augment(images[r], options.augmentation, rng), options.side));
            batch_labels.push_back(labels[r]);
          }
          auto result = net.backward(nn::stack(batch), batch_labels);
          std::copy(result.gradients.begin(), result.gradients.end(), grads.begin());
          return result.loss;
        },
        observer);
  }

  ImageModelOptions recorded = options;
  if (options.augmentation.is_identity()) recorded.augmentation = AugmentationPolicy::none();
  auto artifact = nn::ModelArtifact::capture(net);
  artifact.metadata = {{"modality", "image"},
                       {"preset", to_string(options.preset)},
                       {"side", options.side},
                       {"options", to_json(recorded)},
                       {"labels", manifest.label_set.names()}};
  return artifact;
}

ImageModel::ImageModel(const nn::ModelArtifact& artifact) : network_(artifact.instantiate()) {
  if (artifact.metadata.value("modality", "") != "image") throw ModalityError("artifact is not an image model");
  side_ = artifact.metadata.at("side").get<std::size_t>();
  if (network_.input_shape() != nn::Shape{3, side_, side_}) {
    throw ValidationError("image model input shape does not match its recorded side");
  }
}

ClassScores ImageModel::predict(const PageImage& image) const {
  return predict(std::vector<nn::Tensor>{preprocess(image, side_)}).front();
}

ClassScores ImageModel::predict(const std::filesystem::path& path) const { return predict(load_image(path)); }

std::vector<ClassScores> ImageModel::predict(const std::vector<nn::Tensor>& inputs) const {
  constexpr std::size_t kChunk = 64;
  std::vector<ClassScores> out;
  out.reserve(inputs.size());
  for (std::size_t begin = 0; begin < inputs.size(); begin += kChunk) {
    const std::span<const nn::Tensor> part(inputs.data() + begin, std::min(kChunk, inputs.size() - begin));
    for (auto& s : network_.predict_scores(nn::stack(part))) out.push_back(std::move(s));
  }
  return out;
}

ClassScores predict_image(const nn::ModelArtifact& artifact, const std::filesystem::path& path) {
  return ImageModel(artifact).predict(path);
}

}  // namespace mmdoc::image
