#include "mmdoc/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mmdoc/core/error.hpp"

namespace mmdoc {

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("label set must contain at least one class");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("label names must be non-empty");
    if (!seen.insert(n).second) throw ValidationError("duplicate label name '" + n + "'");
  }
}

LabelSet LabelSet::with_default_names(std::size_t c) {
  std::vector<std::string> names;
  names.reserve(c);
  for (std::size_t i = 0; i < c; ++i) names.push_back("class" + std::to_string(i));
  return LabelSet(std::move(names));
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  if (text == "test") return Split::Test;
  throw ParseError("unknown split '" + std::string(text) + "'");
}

ClassScores::ClassScores(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("class scores must be non-empty");
  double sum = 0;
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("class score outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw ValidationError("class scores do not sum to 1");
}

ClassScores ClassScores::uniform(std::size_t c) {
  return ClassScores(std::vector<double>(c, 1.0 / static_cast<double>(c)));
}

ClassScores ClassScores::softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax of empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return ClassScores(std::move(out));
}

ClassIndex argmax_class(std::span<const double> values) {
  ClassIndex best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace mmdoc
