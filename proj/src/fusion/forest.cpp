#include "mmdoc/fusion/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::fusion {

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

namespace {

std::size_t depth_from(const Tree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  if (n.leaf) return 0;
  return 1 + std::max(depth_from(t, n.left), depth_from(t, n.right));
}

void emit_preorder(const std::vector<TreeNode>& built, std::size_t id, std::vector<TreeNode>& out) {
  const std::size_t at = out.size();
  out.push_back(built[id]);
  if (built[id].leaf) return;
  out[at].left = out.size();
  emit_preorder(built, built[id].left, out);
  out[at].right = out.size();
  emit_preorder(built, built[id].right, out);
}

struct Stats {
  double g = 0, h = 0;
  std::size_t n = 0;
};

struct Candidate {
  bool found = false;
  double gain = 0;
  std::size_t feature = 0;
  double threshold = 0;
};

struct Scan {
  Stats left;
  double last = 0;
  bool has_last = false;
};

double leaf_value(const Stats& s) { return s.h > 0 ? -s.g / s.h : 0.0; }

}  // namespace

std::size_t Tree::depth() const { return nodes.empty() ? 0 : depth_from(*this, 0); }

SortedColumns::SortedColumns(const FeatureMatrix& x) : rows_(x.rows), order_(x.rows * x.cols) {
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto col = std::span<std::size_t>(order_.data() + f * rows_, rows_);
    std::iota(col.begin(), col.end(), std::size_t{0});
    std::stable_sort(col.begin(), col.end(), [&](std::size_t a, std::size_t b) { return x.at(a, f) < x.at(b, f); });
  }
}

Tree fit_tree(const FeatureMatrix& x, std::span<const double> gradients, std::span<const double> hessians,
              const TreeParams& params) {
  return fit_tree(x, SortedColumns(x), gradients, hessians, params);
}

Tree fit_tree(const FeatureMatrix& x, const SortedColumns& sorted, std::span<const double> gradients,
              std::span<const double> hessians, const TreeParams& params) {
  const std::size_t n = x.rows;
  if (n == 0) throw ValidationError("cannot fit a tree on zero rows");
  if (gradients.size() != n || hessians.size() != n) {
    throw ShapeError("gradient and hessian lengths must equal the row count");
  }
  for (double h : hessians) {
    if (!(h >= 0)) throw ValidationError("hessians must be non-negative");
  }
  const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);

  std::vector<TreeNode> built(1);
  std::vector<Stats> stats(1);
  for (std::size_t i = 0; i < n; ++i) {
    stats[0].g += gradients[i];
    stats[0].h += hessians[i];
  }
  stats[0].n = n;
  std::vector<std::size_t> node_of(n, 0);
  std::vector<std::size_t> frontier{0};

  for (std::size_t depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    std::vector<long> slot_of(built.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[frontier[s]] = static_cast<long>(s);
    std::vector<Candidate> best(frontier.size());
    std::vector<Scan> scans(frontier.size());

    for (std::size_t f = 0; f < x.cols; ++f) {
      std::fill(scans.begin(), scans.end(), Scan{});
      for (std::size_t row : sorted.order(f)) {
        const long slot = slot_of[node_of[row]];
        if (slot < 0) continue;
        Scan& sc = scans[slot];
        const Stats& total = stats[frontier[slot]];
        const double v = x.at(row, f);
        if (sc.has_last && v != sc.last && sc.left.n >= min_leaf && total.n - sc.left.n >= min_leaf) {
          const double gl = sc.left.g, hl = sc.left.h;
          const double gr = total.g - gl, hr = total.h - hl;
          if (hl > 0 && hr > 0 && total.h > 0) {
            const double a = gl * gl / hl, b = gr * gr / hr, c = total.g * total.g / total.h;
            const double gain = 0.5 * (a + b - c);
            // rounding noise of the three terms is not a real improvement
            if (gain > 0 && gain > 1e-12 * (a + b + c)) {
              Candidate& cand = best[slot];
              // gains equal up to rounding count as ties and keep the earlier split
              if (!cand.found || gain > cand.gain + 1e-12 * cand.gain) {
                double t = sc.last + (v - sc.last) / 2;
                if (t <= sc.last) t = v;
                cand = {true, gain, f, t};
              }
            }
          }
        }
        sc.left.g += gradients[row];
        sc.left.h += hessians[row];
        ++sc.left.n;
        sc.last = v;
        sc.has_last = true;
      }
    }

    std::vector<std::size_t> next;
    std::vector<long> child_of(built.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const std::size_t id = frontier[s];
      if (!best[s].found) continue;
      const std::size_t l = built.size();
      built.resize(l + 2);
      stats.resize(l + 2);
      TreeNode& node = built[id];
      node.leaf = false;
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.gain = best[s].gain;
      node.left = l;
      node.right = l + 1;
      child_of[id] = static_cast<long>(l);
      next.push_back(l);
      next.push_back(l + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t id = node_of[i];
      if (child_of[id] < 0) continue;
      const TreeNode& node = built[id];
      const std::size_t to = x.at(i, node.feature) < node.threshold ? node.left : node.right;
      node_of[i] = to;
      stats[to].g += gradients[i];
      stats[to].h += hessians[i];
      ++stats[to].n;
    }
    frontier = std::move(next);
  }

  for (std::size_t id = 0; id < built.size(); ++id) {
    if (built[id].leaf) built[id].value = leaf_value(stats[id]);
  }
  Tree tree;
  emit_preorder(built, 0, tree.nodes);
  return tree;
}

void BoostParams::validate() const {
  if (max_depth < 1) throw ValidationError("max_depth must be at least 1");
  if (rounds < 1) throw ValidationError("rounds must be at least 1");
  if (!(shrinkage > 0 && shrinkage <= 1)) throw ValidationError("shrinkage must be in (0, 1]");
}

std::vector<double> BoostedForest::margins(std::span<const double> x) const {
  if (x.size() != features) {
    throw ShapeError("forest expects " + std::to_string(features) + " features, got " + std::to_string(x.size()));
  }
  std::vector<double> m(classes, base_score);
  for (const auto& round : trees) {
    for (std::size_t k = 0; k < classes; ++k) m[k] += shrinkage * round[k].predict(x);
  }
  return m;
}

ClassScores BoostedForest::predict(std::span<const double> x) const { return ClassScores::softmax(margins(x)); }

namespace {

void softmax_row(std::span<const double> m, std::span<double> p) {
  const double mx = *std::max_element(m.begin(), m.end());
  double sum = 0;
  for (std::size_t k = 0; k < m.size(); ++k) sum += p[k] = std::exp(m[k] - mx);
  for (auto& v : p) v /= sum;
}

}  // namespace

double log_loss(const FeatureMatrix& margins, std::span<const ClassIndex> labels) {
  double total = 0;
  for (std::size_t i = 0; i < margins.rows; ++i) {
    const auto m = margins.row(i);
    const double mx = *std::max_element(m.begin(), m.end());
    double sum = 0;
    for (double v : m) sum += std::exp(v - mx);
    total += std::log(sum) + mx - m[labels[i]];
  }
  return total / static_cast<double>(margins.rows);
}

BoostedForest fit_forest(const FeatureMatrix& x, std::span<const ClassIndex> labels, std::size_t classes,
                         const BoostParams& params, std::vector<double>* loss_trace) {
  params.validate();
  if (x.rows == 0) throw ValidationError("meta-classifier needs at least one training row");
  if (labels.size() != x.rows) throw ShapeError("labels and feature rows differ in length");
  if (classes < 2) throw ValidationError("a classifier needs at least 2 classes");
  for (auto y : labels) {
    if (y >= classes) throw ValidationError("label out of range");
  }

  BoostedForest forest;
  forest.classes = classes;
  forest.features = x.cols;
  forest.shrinkage = params.shrinkage;
  forest.max_depth = params.max_depth;

  const SortedColumns sorted(x);
  const TreeParams tp{params.max_depth, params.min_samples_leaf};
  FeatureMatrix margins(x.rows, classes);
  std::fill(margins.data.begin(), margins.data.end(), forest.base_score);
  FeatureMatrix probs(x.rows, classes);
  std::vector<double> g(x.rows), h(x.rows);
  if (loss_trace) loss_trace->push_back(log_loss(margins, labels));

  for (std::size_t r = 0; r < params.rounds; ++r) {
    for (std::size_t i = 0; i < x.rows; ++i) softmax_row(margins.row(i), probs.row(i));
    std::vector<Tree> round(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      for (std::size_t i = 0; i < x.rows; ++i) {
        const double p = probs.at(i, k);
        g[i] = p - (labels[i] == k ? 1.0 : 0.0);
        h[i] = p * (1 - p);
      }
      round[k] = fit_tree(x, sorted, g, h, tp);
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
      auto m = margins.row(i);
      for (std::size_t k = 0; k < classes; ++k) m[k] += forest.shrinkage * round[k].predict(x.row(i));
    }
    forest.trees.push_back(std::move(round));
    if (loss_trace) loss_trace->push_back(log_loss(margins, labels));
  }
  return forest;
}

namespace {

void format_tree(const Tree& t, std::size_t i, std::string& out) {
  const auto& n = t.nodes[i];
  if (n.leaf) {
    out += "leaf " + util::format_double(n.value) + "\n";
    return;
  }
  out += "split " + std::to_string(n.feature) + " " + util::format_double(n.threshold) + " " +
         util::format_double(n.gain) + "\n";
  format_tree(t, n.left, out);
  format_tree(t, n.right, out);
}

class ForestReader {
 public:
  explicit ForestReader(std::string_view text) {
    for (auto line : util::split(text, '\n')) {
      line = util::trim(line);
      if (!line.empty()) lines_.push_back(line);
    }
  }

  std::vector<std::string_view> next(std::string_view keyword, std::size_t fields) {
    if (pos_ >= lines_.size()) throw FormatError("forest: unexpected end, expected '" + std::string(keyword) + "'");
    auto parts = util::split(lines_[pos_], ' ');
    if (parts.empty() || parts[0] != keyword || parts.size() != fields + 1) {
      throw FormatError("forest line " + std::to_string(pos_ + 1) + ": expected '" + std::string(keyword) + "' with " +
                        std::to_string(fields) + " field(s)");
    }
    ++pos_;
    return {parts.begin() + 1, parts.end()};
  }

  std::string_view peek_keyword() const {
    if (pos_ >= lines_.size()) throw FormatError("forest: unexpected end of input");
    return util::split(lines_[pos_], ' ')[0];
  }

  std::string rest_after(std::string_view keyword) {
    if (pos_ >= lines_.size() || lines_[pos_].substr(0, keyword.size() + 1) != std::string(keyword) + " ") {
      throw FormatError("forest line " + std::to_string(pos_ + 1) + ": expected '" + std::string(keyword) + "'");
    }
    return std::string(lines_[pos_++].substr(keyword.size() + 1));
  }

  bool done() const { return pos_ >= lines_.size(); }

  void read_node(Tree& t, std::size_t depth_left) {
    const auto kw = peek_keyword();
    const std::size_t at = t.nodes.size();
    t.nodes.emplace_back();
    if (kw == "leaf") {
      t.nodes[at].value = number(next("leaf", 1)[0]);
      return;
    }
    const auto f = next("split", 3);
    if (depth_left == 0) throw FormatError("forest: tree deeper than its declared max_depth");
    t.nodes[at].leaf = false;
    t.nodes[at].feature = count(f[0]);
    t.nodes[at].threshold = number(f[1]);
    t.nodes[at].gain = number(f[2]);
    t.nodes[at].left = t.nodes.size();
    read_node(t, depth_left - 1);
    t.nodes[at].right = t.nodes.size();
    read_node(t, depth_left - 1);
  }

  static double number(std::string_view s) {
    try {
      return util::parse_double(s);
    } catch (const Error&) {
      throw FormatError("forest: bad number '" + std::string(s) + "'");
    }
  }

  static std::size_t count(std::string_view s) {
    std::size_t v = 0;
    if (s.empty()) throw FormatError("forest: empty integer field");
    for (char c : s) {
      if (c < '0' || c > '9') throw FormatError("forest: bad integer '" + std::string(s) + "'");
      v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    return v;
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_forest(const BoostedForest& f) {
  std::string out = "mmdoc-forest " + std::to_string(kForestFormatVersion) + "\n";
  out += "classes " + std::to_string(f.classes) + "\n";
  out += "features " + std::to_string(f.features) + "\n";
  out += "rounds " + std::to_string(f.rounds()) + "\n";
  out += "shrinkage " + util::format_double(f.shrinkage) + "\n";
  out += "base_score " + util::format_double(f.base_score) + "\n";
  out += "max_depth " + std::to_string(f.max_depth) + "\n";
  out += "components " + std::to_string(f.components.size()) + "\n";
  for (const auto& c : f.components) out += "component " + c + "\n";
  for (std::size_t r = 0; r < f.trees.size(); ++r) {
    for (std::size_t k = 0; k < f.classes; ++k) {
      out += "tree " + std::to_string(r) + " " + std::to_string(k) + "\n";
      format_tree(f.trees[r][k], 0, out);
    }
  }
  out += "end\n";
  return out;
}

BoostedForest parse_forest(std::string_view text) {
  ForestReader in(text);
  const auto version = ForestReader::count(in.next("mmdoc-forest", 1)[0]);
  if (version != kForestFormatVersion) throw FormatError("unsupported forest format version " + std::to_string(version));
  BoostedForest f;
  f.classes = ForestReader::count(in.next("classes", 1)[0]);
  f.features = ForestReader::count(in.next("features", 1)[0]);
  const std::size_t rounds = ForestReader::count(in.next("rounds", 1)[0]);
  f.shrinkage = ForestReader::number(in.next("shrinkage", 1)[0]);
  f.base_score = ForestReader::number(in.next("base_score", 1)[0]);
  f.max_depth = ForestReader::count(in.next("max_depth", 1)[0]);
  const std::size_t components = ForestReader::count(in.next("components", 1)[0]);
  for (std::size_t i = 0; i < components; ++i) f.components.push_back(in.rest_after("component"));
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<Tree> round(f.classes);
    for (std::size_t k = 0; k < f.classes; ++k) {
      const auto ids = in.next("tree", 2);
      if (ForestReader::count(ids[0]) != r || ForestReader::count(ids[1]) != k) {
        throw FormatError("forest: trees out of order at round " + std::to_string(r) + " class " + std::to_string(k));
      }
      in.read_node(round[k], f.max_depth);
      for (const auto& node : round[k].nodes) {
        if (!node.leaf && node.feature >= f.features) throw FormatError("forest: split feature out of range");
      }
    }
    f.trees.push_back(std::move(round));
  }
  in.next("end", 0);
  if (!in.done()) throw FormatError("forest: trailing content after 'end'");
  return f;
}

}  // namespace mmdoc::fusion
