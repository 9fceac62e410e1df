#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "mmdoc/core/error.hpp"
#include "mmdoc/core/manifest.hpp"
#include "mmdoc/core/types.hpp"
#include "mmdoc/nn/rng.hpp"

namespace mmdoc {
namespace {

std::string header16() {
  std::string h = "#labels: ";
  for (int i = 0; i < 16; ++i) h += (i ? "," : "") + std::string("c") + std::to_string(i);
  return h + "\n";
}

TEST(LabelSet, RejectsDuplicatesAndEmptyNames) {
  EXPECT_THROW(LabelSet({"a", "a"}), ValidationError);
  EXPECT_THROW(LabelSet({"a", ""}), ValidationError);
  EXPECT_EQ(LabelSet::with_default_names().size(), 16u);
}

TEST(Manifest, ParsesMinimalValidInput) {
  auto m = parse_manifest(header16() +
                          "p1\ttrain\t0\timg/p1.pgm\t-\n"
                          "p2\tvalidation\t1\t-\ttxt/p2.txt\n"
                          "p3\ttest\t15\timg/p3.pgm\ttxt/p3.txt\n");
  ASSERT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.label_set.size(), 16u);
  EXPECT_EQ(m.records[2].label, 15u);
  EXPECT_FALSE(m.records[0].text_path.has_value());
  EXPECT_FALSE(m.records[1].image_path.has_value());
  EXPECT_EQ(m.records[1].split, Split::Validation);
}

TEST(Manifest, RejectsLabelOutOfRange) {
  EXPECT_THROW(parse_manifest(header16() + "p1\ttrain\t16\ta.pgm\t-\n"), ValidationError);
}

TEST(Manifest, RejectsDuplicateIds) {
  EXPECT_THROW(parse_manifest(header16() + "p1\ttrain\t0\ta.pgm\t-\np1\ttest\t1\tb.pgm\t-\n"), ValidationError);
}

TEST(Manifest, RejectsRecordWithoutModality) {
  EXPECT_THROW(parse_manifest(header16() + "p1\ttrain\t0\t-\t-\n"), ValidationError);
}

TEST(Manifest, ParseErrors) {
  EXPECT_THROW(parse_manifest("p1\ttrain\t0\ta\t-\n"), ParseError);                 // no header
  EXPECT_THROW(parse_manifest(header16() + "p1\ttrain\t0\ta\n"), ParseError);       // 4 fields
  EXPECT_THROW(parse_manifest(header16() + "p1\tdev\t0\ta\t-\n"), ParseError);      // bad split
  EXPECT_THROW(parse_manifest(header16() + "p1\ttrain\tx\ta\t-\n"), ParseError);    // bad label
  EXPECT_THROW(load_manifest("/nonexistent/manifest.tsv"), IoError);
}

TEST(Manifest, FormatRoundTrips) {
  const std::string text = header16() + "a\ttrain\t3\timg/a.pgm\t-\nb\ttest\t4\t-\tb.txt\n";
  auto m = parse_manifest(text);
  EXPECT_EQ(format_manifest(m), text);
}

TEST(Manifest, ResolvesRelativePathsAgainstRoot) {
  auto m = parse_manifest(header16() + "a\ttrain\t3\timg/a.pgm\t/abs/a.txt\n", "/data/set");
  EXPECT_EQ(m.resolve(*m.records[0].image_path), std::filesystem::path("/data/set/img/a.pgm"));
  EXPECT_EQ(m.resolve(*m.records[0].text_path), std::filesystem::path("/abs/a.txt"));
}

TEST(FilterSplit, SelectsRequestedSplit) {
  auto m = parse_manifest(header16() + "a\ttrain\t0\tx\t-\nb\ttrain\t1\tx\t-\nc\ttest\t2\tx\t-\n");
  EXPECT_EQ(filter_split(m, Split::Test).records.size(), 1u);
  EXPECT_TRUE(filter_split(m, Split::Validation).records.empty());
  EXPECT_EQ(filter_split(m, Split::Train).label_set, m.label_set);
}

TEST(FilterSplit, OneRecordPerSplit) {
  auto m = parse_manifest(header16() + "a\ttrain\t0\tx\t-\nb\tvalidation\t1\tx\t-\nc\ttest\t2\tx\t-\n");
  auto train = filter_split(m, Split::Train);
  ASSERT_EQ(train.records.size(), 1u);
  EXPECT_EQ(train.records[0].id, "a");
}

TEST(FilterSplit, PartitionsRecordMultiset) {
  nn::Rng rng(5);
  DatasetManifest m;
  m.label_set = LabelSet::with_default_names(4);
  for (int i = 0; i < 200; ++i) {
    PageRecord r;
    r.id = "r" + std::to_string(i);
    r.label = rng.below(4);
    r.split = static_cast<Split>(rng.below(3));
    r.text_path = "t.txt";
    m.records.push_back(r);
  }
  std::vector<std::string> ids;
  for (auto s : {Split::Train, Split::Validation, Split::Test}) {
    for (const auto& r : filter_split(m, s).records) {
      EXPECT_EQ(r.split, s);
      ids.push_back(r.id);
    }
  }
  std::vector<std::string> expected;
  for (const auto& r : m.records) expected.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(ids, expected);
}

TEST(ArgmaxClass, Examples) {
  EXPECT_EQ(argmax_class(ClassScores({0.1, 0.7, 0.2})), 1u);
  EXPECT_EQ(argmax_class(ClassScores({0.5, 0.5})), 0u);
  EXPECT_EQ(argmax_class(ClassScores::uniform(16)), 0u);
}

TEST(ArgmaxClass, InvariantUnderIncreasingTransform) {
  nn::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(1 + rng.below(16));
    for (auto& x : v) x = std::floor(rng.uniform(0, 5));  // coarse values force ties
    std::vector<double> t(v.size());
    std::transform(v.begin(), v.end(), t.begin(), [](double x) { return 2 * x + 1; });
    EXPECT_EQ(argmax_class(v), argmax_class(t));
  }
}

TEST(ClassScores, ValidatesProbabilityInvariants) {
  EXPECT_THROW(ClassScores({0.5, 0.6}), ValidationError);
  EXPECT_THROW(ClassScores({-0.1, 1.1}), ValidationError);
  EXPECT_THROW(ClassScores(std::vector<double>{}), ValidationError);
  EXPECT_NO_THROW(ClassScores({0.3, 0.7 + 5e-7}));
}

TEST(ClassScores, SoftmaxIsAValidDistribution) {
  nn::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(2 + rng.below(20));
    for (auto& z : logits) z = rng.uniform(-50, 50);
    auto s = ClassScores::softmax(logits);
    double sum = 0;
    for (double v : s.values()) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace mmdoc
