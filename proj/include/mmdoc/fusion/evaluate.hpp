#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/core/types.hpp"

namespace mmdoc::fusion {

struct EvaluationReport {
  Split split = Split::Test;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0;
  std::vector<std::optional<double>> per_class_accuracy;  // empty when the class has no records
  std::vector<std::vector<std::size_t>> confusion;        // [true][predicted]
};

using BatchPredictor =
    std::function<std::vector<ClassScores>(const DatasetManifest&, std::span<const PageRecord>)>;

/// Throws ValidationError when the split is empty.
EvaluationReport evaluate(const BatchPredictor& predict, const DatasetManifest& manifest, Split split);
EvaluationReport evaluate_scores(std::span<const ClassScores> scores, std::span<const PageRecord> records,
                                 std::size_t classes, Split split);

std::string format_report(const EvaluationReport& report, const LabelSet& labels);
/// Long format: `metric<TAB>true<TAB>predicted<TAB>value`.
std::string format_report_tsv(const EvaluationReport& report, const LabelSet& labels);

/// One row per model combination: image model, text model, validation and
/// test accuracy. "-" marks an absent component; NaN accuracies print as "-".
struct ResultRow {
  std::string image_model;
  std::string text_model;
  double validation_accuracy = 0;
  double test_accuracy = 0;
};

std::string format_results_table(std::span<const ResultRow> rows);
std::string format_results_tsv(std::span<const ResultRow> rows);

}  // namespace mmdoc::fusion
