#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mmdoc/cli/commands.hpp"
#include "mmdoc/cli/config.hpp"
#include "mmdoc/core/error.hpp"

namespace fs = std::filesystem;
using namespace mmdoc;

int main(int argc, char** argv) {
  CLI::App app{"Multimodal page classification: OCR ingestion, component training, fusion, evaluation, audit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> manifest, output_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--manifest", manifest, "Override the manifest path");
  app.add_option("--output-dir", output_dir, "Override the output directory");
  app.add_option("--seed", seed, "Override the run seed");

  auto* extract = app.add_subcommand("extract", "OCR image-only records into text files");

  auto* train = app.add_subcommand("train", "Train component models");
  std::string modality = "all";
  std::vector<std::size_t> vocab_sizes;
  train->add_option("--modality", modality, "text, image or all")->check(CLI::IsMember({"text", "image", "all"}));
  train->add_option("--vocab-sizes", vocab_sizes, "BoW sizes to sweep (overrides text.vocab_sizes)")->delimiter(',');

  auto* fuse = app.add_subcommand("fuse", "Train the meta-classifier over component artifacts");
  std::vector<std::string> fuse_artifacts;
  bool allow_single = false;
  fuse->add_option("artifacts", fuse_artifacts, "Component model files, in feature order");
  fuse->add_flag("--allow-single", allow_single, "Permit a single component");

  auto* evaluate = app.add_subcommand("evaluate", "Report accuracy of models or a fusion forest");
  std::vector<std::string> eval_artifacts;
  std::optional<std::string> split;
  evaluate->add_option("artifacts", eval_artifacts, "Model or .forest files")->required();
  evaluate->add_option("--split", split, "train, validation or test (default: validation and test)")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  auto* audit = app.add_subcommand("audit", "Find duplicate pages across splits and classes");
  std::string method = "text";
  audit->add_option("--method", method, "text or image")->check(CLI::IsMember({"text", "image"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitValidation;
  }

  try {
    cli::Overrides ov;
    if (manifest) ov.manifest = fs::path(*manifest);
    if (output_dir) ov.output_dir = fs::path(*output_dir);
    ov.seed = seed;
    auto config = cli::load_run_config(config_path, ov);

    if (extract->parsed()) return cli::cmd_extract(config, std::cout);
    if (train->parsed()) {
      if (!vocab_sizes.empty()) {
        nlohmann::json j = cli::to_json(config);
        j["text"]["vocab_sizes"] = vocab_sizes;
        config = cli::parse_run_config(j, fs::current_path());
      }
      return cli::cmd_train(config, cli::parse_train_target(modality), std::cout);
    }
    if (fuse->parsed()) {
      config.fusion.allow_single_component = config.fusion.allow_single_component || allow_single;
      return cli::cmd_fuse(config, {fuse_artifacts.begin(), fuse_artifacts.end()}, std::cout);
    }
    if (evaluate->parsed()) {
      const std::optional<Split> s = split ? std::optional<Split>(parse_split(*split)) : std::nullopt;
      return cli::cmd_evaluate(config, {eval_artifacts.begin(), eval_artifacts.end()}, s, std::cout);
    }
    if (audit->parsed()) return cli::cmd_audit(config, audit::parse_method(method), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kExitValidation;
}
