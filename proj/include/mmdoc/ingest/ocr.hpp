#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdoc/core/error.hpp"
#include "mmdoc/core/manifest.hpp"
#include "mmdoc/image/page_image.hpp"

namespace mmdoc::ingest {

inline constexpr std::size_t kOcrLongestSide = 3300;

/// External OCR invocation. The template is run by /bin/sh after
/// substitution: `{input}` and `{output}` become shell-quoted paths and
/// `{args}` (optional) is replaced verbatim by engine_args.
struct OcrConfig {
  std::string command_template = "tesseract {input} stdout {args} > {output}";
  std::size_t longest_side_px = kOcrLongestSide;
  std::string engine_args = "--oem 3 --psm 3";  // combined legacy/LSTM engine, automatic page segmentation

  void validate() const;
};

nlohmann::json to_json(const OcrConfig& config);
OcrConfig ocr_config_from_json(const nlohmann::json& j);

class ExtractionError : public Error {
 public:
  ExtractionError(const std::string& what, int exit_status) : Error(what), exit_status_(exit_status) {}
  /// Shell exit status, -1 when the command never ran or died on a signal.
  int exit_status() const { return exit_status_; }
  bool command_missing() const { return exit_status_ == 127; }

 private:
  int exit_status_;
};

/// Scales so the longer side equals `longest_side_px`, rounding the other
/// side to the nearest pixel (at least 1). Upscales as well as downscales.
image::PageImage resize_for_ocr(const image::PageImage& image, std::size_t longest_side_px);

struct ExtractedText {
  std::string text;
  bool invalid_utf8 = false;  // offending bytes were replaced by U+FFFD
};

/// Replaces every ill-formed UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes, bool* replaced = nullptr);

ExtractedText extract_text(const image::PageImage& page, const OcrConfig& config);
/// Throws ValidationError when the record has no image.
ExtractedText extract_text(const DatasetManifest& manifest, const PageRecord& record, const OcrConfig& config);

enum class ExtractionStatus { Extracted, Skipped, Failed };
std::string_view to_string(ExtractionStatus status);

struct ExtractionEntry {
  std::string id;
  ExtractionStatus status = ExtractionStatus::Extracted;
  std::string detail;
};

struct ExtractionSummary {
  DatasetManifest manifest;  // every path absolute
  std::vector<ExtractionEntry> entries;
  std::size_t extracted = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// OCRs every record that has an image but no text into `<output_dir>/<id>.txt`.
/// Existing output files are reused, never rewritten. Per-record failures are
/// collected in the summary; the failed record keeps no text path.
ExtractionSummary extract_corpus(const DatasetManifest& manifest, const OcrConfig& config,
                                 const std::filesystem::path& output_dir);

/// `id<TAB>status<TAB>detail` with a header row.
std::string format_extraction_summary(const ExtractionSummary& summary);

}  // namespace mmdoc::ingest
