#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmdoc {

using ClassIndex = std::size_t;

/// Ordered, unique class names. The number of classes `c` is `size()`.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  /// The 16-class default label space (`class0` .. `class15`).
  static LabelSet with_default_names(std::size_t c = 16);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(ClassIndex i) const { return names_.at(i); }

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::string> names_;
};

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
/// Accepts "train", "validation" and "test".
Split parse_split(std::string_view text);

struct PageRecord {
  std::string id;
  std::optional<std::filesystem::path> image_path;
  std::optional<std::filesystem::path> text_path;
  ClassIndex label = 0;
  Split split = Split::Train;

  bool operator==(const PageRecord&) const = default;
};

/// Per-class probability vector emitted by every classifier in the system.
/// Constructed values always satisfy: entries in [0,1], sum within 1e-6 of 1.
class ClassScores {
 public:
  static constexpr double kSumTolerance = 1e-6;

  ClassScores() = default;
  /// Validates the probability invariants; throws ValidationError.
  explicit ClassScores(std::vector<double> values);

  /// Uniform distribution over `c` classes.
  static ClassScores uniform(std::size_t c);
  /// Numerically stable softmax of raw scores.
  static ClassScores softmax(std::span<const double> logits);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const ClassScores&) const = default;

 private:
  std::vector<double> values_;
};

/// Index of the largest entry; ties go to the lowest index.
ClassIndex argmax_class(std::span<const double> values);
inline ClassIndex argmax_class(const ClassScores& scores) { return argmax_class(scores.values()); }

}  // namespace mmdoc
