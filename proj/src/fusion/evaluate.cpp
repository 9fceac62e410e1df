#include "mmdoc/fusion/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::fusion {

EvaluationReport evaluate_scores(std::span<const ClassScores> scores, std::span<const PageRecord> records,
                                 std::size_t classes, Split split) {
  if (scores.size() != records.size()) throw ShapeError("scores and records differ in length");
  EvaluationReport rep;
  rep.split = split;
  rep.total = records.size();
  rep.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ClassIndex predicted = argmax_class(scores[i]);
    if (predicted >= classes || records[i].label >= classes) throw ShapeError("class index out of range");
    ++rep.confusion[records[i].label][predicted];
    if (predicted == records[i].label) ++rep.correct;
  }
  rep.accuracy = rep.total == 0 ? 0.0 : static_cast<double>(rep.correct) / static_cast<double>(rep.total);
  for (std::size_t k = 0; k < classes; ++k) {
    std::size_t row = 0;
    for (auto v : rep.confusion[k]) row += v;
    rep.per_class_accuracy.push_back(row == 0 ? std::nullopt
                                              : std::optional<double>(static_cast<double>(rep.confusion[k][k]) /
                                                                      static_cast<double>(row)));
  }
  return rep;
}

EvaluationReport evaluate(const BatchPredictor& predict, const DatasetManifest& manifest, Split split) {
  const auto part = filter_split(manifest, split);
  if (part.records.empty()) throw ValidationError("split '" + std::string(to_string(split)) + "' is empty");
  const auto scores = predict(manifest, part.records);
  return evaluate_scores(scores, part.records, manifest.label_set.size(), split);
}

namespace {

std::string percent(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

}  // namespace

std::string format_report(const EvaluationReport& rep, const LabelSet& labels) {
  std::string out;
  out += "split: " + std::string(to_string(rep.split)) + "\n";
  out += "accuracy: " + percent(rep.accuracy) + " (" + std::to_string(rep.correct) + "/" + std::to_string(rep.total) +
         ")\n\n";
  std::size_t w = 5;
  for (const auto& n : labels.names()) w = std::max(w, n.size());
  out += pad("class", w) + "  accuracy\n";
  for (std::size_t k = 0; k < rep.per_class_accuracy.size(); ++k) {
    const auto& a = rep.per_class_accuracy[k];
    out += pad(labels.name(k), w) + "  " + (a ? percent(*a) : std::string("-")) + "\n";
  }
  out += "\nconfusion (rows true, columns predicted)\n";
  std::size_t cw = 1;
  for (const auto& row : rep.confusion)
    for (auto v : row) cw = std::max(cw, std::to_string(v).size());
  for (std::size_t k = 0; k < rep.confusion.size(); ++k) {
    out += pad(labels.name(k), w);
    for (auto v : rep.confusion[k]) out += " " + lpad(std::to_string(v), cw);
    out += "\n";
  }
  return out;
}

std::string format_report_tsv(const EvaluationReport& rep, const LabelSet& labels) {
  std::string out = "metric\ttrue\tpredicted\tvalue\n";
  const std::string split(to_string(rep.split));
  out += "accuracy\t-\t-\t" + util::format_double(rep.accuracy) + "\n";
  out += "correct\t-\t-\t" + std::to_string(rep.correct) + "\n";
  out += "total\t-\t-\t" + std::to_string(rep.total) + "\n";
  for (std::size_t k = 0; k < rep.per_class_accuracy.size(); ++k) {
    const auto& a = rep.per_class_accuracy[k];
    out += "class_accuracy\t" + labels.name(k) + "\t-\t" + (a ? util::format_double(*a) : std::string("-")) + "\n";
  }
  for (std::size_t t = 0; t < rep.confusion.size(); ++t) {
    for (std::size_t p = 0; p < rep.confusion[t].size(); ++p) {
      out += "confusion\t" + labels.name(t) + "\t" + labels.name(p) + "\t" + std::to_string(rep.confusion[t][p]) + "\n";
    }
  }
  return "# split: " + split + "\n" + out;
}

std::string format_results_table(std::span<const ResultRow> rows) {
  const std::string h[4] = {"Image Model", "Text Model", "Validation Accuracy", "Test Accuracy"};
  std::size_t w[4] = {h[0].size(), h[1].size(), h[2].size(), h[3].size()};
  for (const auto& r : rows) {
    w[0] = std::max(w[0], r.image_model.size());
    w[1] = std::max(w[1], r.text_model.size());
  }
  auto line = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    return pad(a, w[0]) + " | " + pad(b, w[1]) + " | " + lpad(c, w[2]) + " | " + lpad(d, w[3]) + "\n";
  };
  std::string out = line(h[0], h[1], h[2], h[3]);
  out += std::string(w[0], '-') + "-+-" + std::string(w[1], '-') + "-+-" + std::string(w[2], '-') + "-+-" +
         std::string(w[3], '-') + "\n";
  for (const auto& r : rows) {
    out += line(r.image_model, r.text_model, percent(r.validation_accuracy), percent(r.test_accuracy));
  }
  return out;
}

namespace {
std::string number_or_dash(double v) { return std::isnan(v) ? "-" : util::format_double(v); }
}  // namespace

std::string format_results_tsv(std::span<const ResultRow> rows) {
  std::string out = "image_model\ttext_model\tvalidation_accuracy\ttest_accuracy\n";
  for (const auto& r : rows) {
    out += r.image_model + "\t" + r.text_model + "\t" + number_or_dash(r.validation_accuracy) + "\t" +
           number_or_dash(r.test_accuracy) + "\n";
  }
  return out;
}

}  // namespace mmdoc::fusion
