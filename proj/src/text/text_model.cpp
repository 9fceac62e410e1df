#include "mmdoc/text/text_model.hpp"

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::text {

nlohmann::json to_json(const TextModelOptions& o) {
  return {{"vocab_size", o.vocab_size},
          {"hidden_width", o.hidden_width},
          {"epochs", o.train.epochs},
          {"batch_size", o.train.batch_size},
          {"l_max", o.train.schedule.l_max},
          {"l_min", o.train.schedule.l_min},
          {"seed", o.train.seed}};
}

TextModelOptions text_options_from_json(const nlohmann::json& j) {
  TextModelOptions o;
  o.vocab_size = j.value("vocab_size", o.vocab_size);
  o.hidden_width = j.value("hidden_width", o.hidden_width);
  o.train.epochs = j.value("epochs", o.train.epochs);
  o.train.batch_size = j.value("batch_size", o.train.batch_size);
  o.train.schedule.l_max = j.value("l_max", o.train.schedule.l_max);
  o.train.schedule.l_min = j.value("l_min", o.train.schedule.l_min);
  o.train.seed = j.value("seed", o.train.seed);
  return o;
}

nn::NetworkSpec text_network_spec(std::size_t vocab_size, std::size_t hidden_width, std::size_t classes,
                                  std::uint64_t seed) {
  return nn::NetworkSpec{{vocab_size},
                         {nn::DenseSpec{vocab_size, hidden_width}, nn::ReLUSpec{},
                          nn::DenseSpec{hidden_width, classes}, nn::SoftmaxSpec{}},
                         seed};
}

std::string read_record_text(const DatasetManifest& manifest, const PageRecord& record) {
  if (!record.text_path) throw ValidationError("record '" + record.id + "' has no text");
  try {
    return util::read_file(manifest.resolve(*record.text_path));
  } catch (const IoError& e) {
    throw IoError("record '" + record.id + "': " + e.what());
  }
}

nn::ModelArtifact train_text_model(const DatasetManifest& manifest, const TextModelOptions& options) {
  const auto train = filter_split(manifest, Split::Train);
  if (train.records.empty()) throw ValidationError("text model needs a non-empty train split");
  if (options.hidden_width == 0) throw ValidationError("hidden width must be positive");

  std::vector<Tokens> corpus;
  corpus.reserve(train.records.size());
  for (const auto& r : train.records) corpus.push_back(tokenize(read_record_text(manifest, r)));
  const Vocabulary vocab = build_vocabulary(corpus, options.vocab_size);
  if (vocab.size() == 0) throw ValidationError("training texts contain no tokens");

  nn::Dataset data;
  data.inputs = nn::Tensor({corpus.size(), vocab.size()});
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto row = data.inputs.row(i);
    for (auto idx : vectorize(vocab, corpus[i]).present) row[idx] = 1.0;
    data.labels.push_back(train.records[i].label);
  }

  nn::Network net(text_network_spec(vocab.size(), options.hidden_width, manifest.label_set.size(), options.train.seed));
  nn::TrainConfig cfg = options.train;
  cfg.schedule.batches = nn::batches_per_epoch(corpus.size(), cfg.batch_size);
  nn::sgd_train(net, data, cfg);

  auto artifact = nn::ModelArtifact::capture(net);
  artifact.vocabulary = vocab.words();
  artifact.metadata = {{"modality", "text"}, {"options", to_json(options)}, {"labels", manifest.label_set.names()}};
  return artifact;
}

TextModel::TextModel(const nn::ModelArtifact& artifact)
    : vocabulary_(artifact.vocabulary), network_(artifact.instantiate()) {
  if (artifact.metadata.value("modality", "") != "text") throw ModalityError("artifact is not a text model");
  if (network_.input_shape() != nn::Shape{vocabulary_.size()}) {
    throw ValidationError("text model input width does not match its vocabulary");
  }
}

ClassScores TextModel::predict(std::string_view text) const {
  nn::Tensor x({1, vocabulary_.size()});
  for (auto idx : vectorize(vocabulary_, tokenize(text)).present) x.data[idx] = 1.0;
  return network_.predict_scores(x).front();
}

ClassScores predict_text(const nn::ModelArtifact& artifact, std::string_view text) {
  return TextModel(artifact).predict(text);
}

}  // namespace mmdoc::text
