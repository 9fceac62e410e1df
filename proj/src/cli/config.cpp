#include "mmdoc/cli/config.hpp"

#include <set>
#include <string>

#include "mmdoc/core/error.hpp"
#include "mmdoc/image/presets.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in config section '" + section + "'");
  }
}

void check_train(const nn::TrainConfig& t, const std::string& section) {
  if (t.epochs == 0) throw ValidationError(section + ".epochs must be positive");
  if (t.batch_size == 0) throw ValidationError(section + ".batch_size must be positive");
  auto s = t.schedule;
  s.batches = 1;
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(section + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return (p.is_absolute() ? p : fs::absolute(base / p)).lexically_normal();
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir, const Overrides& ov) {
  RunConfig c;
  try {
    check_keys(j, "<top>", {"manifest", "output_dir", "seed", "text", "image", "fusion", "ocr"});
    if (j.contains("manifest")) c.manifest = resolve(base_dir, j.at("manifest").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});

    const json text = j.value("text", json::object());
    check_keys(text, "text", {"vocab_size", "vocab_sizes", "hidden_width", "epochs", "batch_size", "l_max", "l_min"});
    c.text = text::text_options_from_json(text);
    if (text.contains("vocab_sizes") && text.contains("vocab_size")) {
      throw ValidationError("give either text.vocab_size or text.vocab_sizes, not both");
    }
    c.vocab_sizes = text.contains("vocab_sizes") ? text.at("vocab_sizes").get<std::vector<std::size_t>>()
                                                 : std::vector<std::size_t>{c.text.vocab_size};

    const json img = j.value("image", json::object());
    check_keys(img, "image", {"preset", "side", "conv_widths", "dense_widths", "augmentation", "epochs", "batch_size",
                              "l_max", "l_min"});
    if (img.contains("augmentation")) {
      check_keys(img.at("augmentation"), "image.augmentation",
                 {"shear_range_deg", "rotation_range_deg", "salt_pepper_fraction"});
    }
    c.image = image::image_options_from_json(img);

    const json fus = j.value("fusion", json::object());
    if (fus.contains("seed")) throw ValidationError("set the seed at the top level, not in 'fusion'");
    check_keys(fus, "fusion", {"max_depth", "rounds", "shrinkage", "min_samples_leaf", "components", "oof_folds",
                               "meta_source", "allow_single_component"});
    c.fusion = fusion::fusion_config_from_json(fus);

    const json ocr = j.value("ocr", json::object());
    check_keys(ocr, "ocr", {"command_template", "longest_side_px", "engine_args"});
    c.ocr = ingest::ocr_config_from_json(ocr);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }

  if (ov.manifest) c.manifest = fs::absolute(*ov.manifest).lexically_normal();
  if (ov.output_dir) c.output_dir = fs::absolute(*ov.output_dir).lexically_normal();
  if (ov.seed) c.seed = *ov.seed;

  c.text.train.seed = c.seed;
  c.image.train.seed = c.seed;
  c.image.augmentation.seed = c.seed;
  c.fusion.seed = c.seed;

  if (c.manifest.empty()) throw ValidationError("config needs a manifest path");
  if (c.output_dir.empty()) throw ValidationError("config needs an output_dir");
  std::error_code ec;
  if (!fs::is_regular_file(c.manifest, ec)) throw ValidationError("manifest not found: " + c.manifest.string());
  if (fs::exists(c.output_dir, ec) && !fs::is_directory(c.output_dir, ec)) {
    throw ValidationError("output_dir exists and is not a directory: " + c.output_dir.string());
  }

  if (c.vocab_sizes.empty()) throw ValidationError("text.vocab_sizes must not be empty");
  std::set<std::size_t> seen;
  for (auto k : c.vocab_sizes) {
    if (k == 0) throw ValidationError("vocabulary sizes must be positive");
    if (!seen.insert(k).second) throw ValidationError("duplicate vocabulary size " + std::to_string(k));
  }
  c.text.vocab_size = c.vocab_sizes.front();
  if (c.text.hidden_width == 0) throw ValidationError("text.hidden_width must be positive");
  check_train(c.text.train, "text");
  check_train(c.image.train, "image");
  c.image.augmentation.validate();
  // Builds the layer list without allocating weights; rejects bad side/widths.
  (void)image::expand_preset(c.image.preset, c.image.side, 2, c.image.widths, 0);
  c.fusion.validate();
  c.ocr.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
  std::string content;
  try {
    content = util::read_file(path);
  } catch (const IoError& e) {
    throw ValidationError(std::string("cannot read config: ") + e.what());
  }
  json j;
  try {
    j = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, fs::absolute(path).parent_path(), overrides);
}

json to_json(const RunConfig& c) {
  json text = text::to_json(c.text);
  text.erase("vocab_size");
  text.erase("seed");
  text["vocab_sizes"] = c.vocab_sizes;
  json img = image::to_json(c.image);
  img.erase("seed");
  if (img.contains("augmentation")) img["augmentation"].erase("seed");
  json fus = fusion::to_json(c.fusion);
  fus.erase("seed");
  return {{"manifest", c.manifest.string()},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"text", text},
          {"image", img},
          {"fusion", fus},
          {"ocr", ingest::to_json(c.ocr)}};
}

}  // namespace mmdoc::cli
