#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmdoc/audit/audit.hpp"
#include "mmdoc/cli/config.hpp"

namespace mmdoc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,       // I/O, decode, training failures
  kExitValidation = 2,    // bad config, manifest or arguments
  kExitPartial = 3,       // extract: some records failed
  kExitContaminated = 4,  // audit: duplicates span splits
};

/// Maps a caught exception to the exit code contract.
int exit_code_for(const std::exception& e);

// Output names under output_dir.
inline constexpr const char* kRunLog = "run_log.tsv";
inline constexpr const char* kForestFile = "fusion.forest";
inline constexpr const char* kFusionReport = "fusion_report.txt";
inline constexpr const char* kFusionReportTsv = "fusion_report.tsv";
inline constexpr const char* kExtractedManifest = "manifest.tsv";
inline constexpr const char* kExtractionSummary = "extraction_summary.tsv";
inline constexpr const char* kTextDir = "text";

std::string text_artifact_name(std::size_t vocab_size);                  // text_bow<K>.model
std::string image_artifact_name(const image::ImageModelOptions& options);  // image_<preset>_s<side>.model

/// Writes `<text_dir>/<id>.txt`, the extraction summary and an updated
/// manifest with absolute paths. kExitPartial when any record failed.
int cmd_extract(const RunConfig& config, std::ostream& out);

enum class TrainTarget { Text, Image, All };
TrainTarget parse_train_target(std::string_view text);

/// One artifact per model (every BoW size for text) and one run-log line
/// each: artifact, modality, config hash, seed, validation accuracy.
int cmd_train(const RunConfig& config, TrainTarget target, std::ostream& out);

/// Trains the meta-classifier over the given artifacts (default: the ones
/// named by fusion.components, looked up in output_dir), writes the forest
/// and a validation/test report for each component and the fused model.
int cmd_fuse(const RunConfig& config, const std::vector<std::filesystem::path>& artifacts, std::ostream& out);

/// Evaluates model artifacts or a forest (its components are loaded from
/// the forest's directory). Without a split, reports validation and test.
/// Writes `<stem>_<split>.txt/.tsv` per artifact and split.
int cmd_evaluate(const RunConfig& config, const std::vector<std::filesystem::path>& artifacts,
                 std::optional<Split> split, std::ostream& out);

/// Writes audit_<method>.txt (class table, then cross-split groups) and
/// audit_<method>.tsv. kExitContaminated when any group spans splits.
int cmd_audit(const RunConfig& config, audit::Method method, std::ostream& out);

std::string format_contamination(const std::vector<audit::DuplicateGroup>& groups);

}  // namespace mmdoc::cli
