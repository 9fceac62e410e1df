#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmdoc/core/types.hpp"

namespace mmdoc::fusion {

/// Row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Preorder node list; node 0 is the root. Internal nodes send x[feature] <
/// threshold to `left`.
struct TreeNode {
  bool leaf = true;
  double value = 0;  // leaf output
  std::size_t feature = 0;
  double threshold = 0;
  double gain = 0;
  std::size_t left = 0;
  std::size_t right = 0;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  /// Number of internal nodes on the longest root-to-leaf path.
  std::size_t depth() const;

  bool operator==(const Tree&) const = default;
};

struct TreeParams {
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

/// Per-feature ascending row order, shared by all trees of a forest.
class SortedColumns {
 public:
  explicit SortedColumns(const FeatureMatrix& x);
  std::span<const std::size_t> order(std::size_t feature) const {
    return {order_.data() + feature * rows_, rows_};
  }

 private:
  std::size_t rows_ = 0;
  std::vector<std::size_t> order_;
};

/// Second-order regression tree without regularization:
/// gain = 1/2 [GL^2/HL + GR^2/HR - G^2/H], leaf = -G/H.
/// Splits are taken only for positive gain, thresholds sit midway between
/// adjacent distinct values, ties favour the lower feature then threshold.
Tree fit_tree(const FeatureMatrix& x, std::span<const double> gradients, std::span<const double> hessians,
              const TreeParams& params);
Tree fit_tree(const FeatureMatrix& x, const SortedColumns& sorted, std::span<const double> gradients,
              std::span<const double> hessians, const TreeParams& params);

struct BoostParams {
  std::size_t max_depth = 3;
  std::size_t rounds = 100;
  double shrinkage = 0.1;
  std::size_t min_samples_leaf = 1;

  /// Throws ValidationError.
  void validate() const;
};

/// Softmax-objective multiclass boosting: one tree per class per round.
struct BoostedForest {
  std::size_t classes = 0;
  std::size_t features = 0;
  double shrinkage = 1.0;
  double base_score = 0.0;
  std::size_t max_depth = 3;
  std::vector<std::string> components;  // fusion input order
  std::vector<std::vector<Tree>> trees;  // [round][class]

  std::size_t rounds() const { return trees.size(); }
  /// Per-class accumulated outputs before the softmax.
  std::vector<double> margins(std::span<const double> x) const;
  ClassScores predict(std::span<const double> x) const;

  bool operator==(const BoostedForest&) const = default;
};

/// Mean multiclass log-loss of margins against labels.
double log_loss(const FeatureMatrix& margins, std::span<const ClassIndex> labels);

/// `loss_trace`, when given, receives the mean training log-loss before the
/// first round and after every round.
BoostedForest fit_forest(const FeatureMatrix& x, std::span<const ClassIndex> labels, std::size_t classes,
                         const BoostParams& params, std::vector<double>* loss_trace = nullptr);

/// Versioned text format, see README.
std::string format_forest(const BoostedForest& forest);
BoostedForest parse_forest(std::string_view text);

inline constexpr int kForestFormatVersion = 1;

}  // namespace mmdoc::fusion
