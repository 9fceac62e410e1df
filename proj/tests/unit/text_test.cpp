#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mmdoc/core/error.hpp"
#include "mmdoc/nn/model_io.hpp"
#include "mmdoc/text/bow.hpp"
#include "mmdoc/text/text_model.hpp"
#include "synthetic.hpp"

using namespace mmdoc;
using namespace mmdoc::text;

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The cash-flow Report."), (Tokens{"the", "cash", "flow", "report"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("A a A"), (Tokens{"a", "a", "a"}));
  EXPECT_EQ(tokenize("  x1\ty2\n\n"), (Tokens{"x1", "y2"}));
}

TEST(Tokenize, KeepsUtf8InsideTokens) {
  EXPECT_EQ(tokenize("Caf\xc3\xa9 ok"), (Tokens{"caf\xc3\xa9", "ok"}));
}

TEST(Vocabulary, Examples) {
  EXPECT_EQ(build_vocabulary({{"a", "b"}, {"a"}}, 1).words(), (Tokens{"a"}));
  EXPECT_EQ(build_vocabulary({{"a"}, {"b"}}, 1).words(), (Tokens{"a"}));
  EXPECT_EQ(build_vocabulary({{"x", "y", "z"}}, 10).size(), 3u);
}

TEST(Vocabulary, CountsDocumentsNotOccurrences) {
  auto v = build_vocabulary({{"b", "b", "b"}, {"a"}, {"a"}}, 2);
  EXPECT_EQ(v.words(), (Tokens{"a", "b"}));
}

TEST(Vocabulary, Errors) {
  EXPECT_THROW(build_vocabulary({}, 3), ValidationError);
  EXPECT_THROW(build_vocabulary({{"a"}}, 0), ValidationError);
  EXPECT_THROW(Vocabulary({"a", "a"}), ValidationError);
}

TEST(Vocabulary, IndexInvertsWords) {
  auto v = build_vocabulary({{"q", "r", "s"}, {"r"}}, 5);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.index_of(v.words()[i]), i);
  EXPECT_FALSE(v.index_of("nope"));
}

TEST(Vocabulary, FileRoundTrip) {
  Vocabulary v({"alpha", "b\xc3\xa9ta", "7"});
  EXPECT_EQ(format_vocabulary(v), "alpha\nb\xc3\xa9ta\n7\n");
  EXPECT_EQ(parse_vocabulary(format_vocabulary(v)), v);
  EXPECT_EQ(parse_vocabulary("").size(), 0u);
}

namespace {

std::vector<Tokens> random_corpus(std::uint64_t seed, std::size_t docs) {
  nn::Rng rng(seed);
  std::vector<Tokens> corpus(docs);
  for (auto& d : corpus) {
    const std::size_t n = rng.below(15);
    for (std::size_t i = 0; i < n; ++i) d.push_back("w" + std::to_string(rng.below(40) * rng.below(3)));
  }
  return corpus;
}

// Independent ranking: count by brute force, then sort with an explicit comparator.
Tokens oracle_vocabulary(const std::vector<Tokens>& corpus, std::size_t k) {
  std::map<std::string, int> df;
  for (const auto& d : corpus) {
    for (const auto& t : std::set<std::string>(d.begin(), d.end())) df[t]++;
  }
  std::vector<std::pair<int, std::string>> v;
  for (const auto& [t, n] : df) v.emplace_back(-n, t);
  std::sort(v.begin(), v.end());
  Tokens out;
  for (std::size_t i = 0; i < std::min(k, v.size()); ++i) out.push_back(v[i].second);
  return out;
}

}  // namespace

TEST(Vocabulary, MatchesOracleAndPrefixAndOrderFree) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto corpus = random_corpus(seed, 30);
    const auto big = build_vocabulary(corpus, 25);
    EXPECT_EQ(big.words(), oracle_vocabulary(corpus, 25));
    for (std::size_t k1 = 1; k1 < 25; k1 += 3) {
      const auto small = build_vocabulary(corpus, k1);
      ASSERT_LE(small.size(), big.size());
      EXPECT_TRUE(std::equal(small.words().begin(), small.words().end(), big.words().begin()));
    }
    nn::Rng rng(seed);
    rng.shuffle(std::span<Tokens>(corpus));
    EXPECT_EQ(build_vocabulary(corpus, 25), big);
  }
}

TEST(Vectorize, Examples) {
  Vocabulary v({"a", "b", "c"});
  EXPECT_EQ(vectorize(v, {"a", "c", "a"}).dense(), (std::vector<double>{1, 0, 1}));
  EXPECT_EQ(vectorize(v, {"z"}).dense(), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(vectorize(v, {}).dense(), (std::vector<double>{0, 0, 0}));
}

TEST(Vectorize, IdempotentInMultiplicity) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto corpus = random_corpus(seed, 10);
    auto v = build_vocabulary(corpus, 12);
    for (const auto& d : corpus) {
      Tokens twice = d;
      twice.insert(twice.end(), d.begin(), d.end());
      EXPECT_EQ(vectorize(v, d), vectorize(v, twice));
      for (auto i : vectorize(v, d).present) EXPECT_LT(i, v.size());
    }
  }
}

class MarkerCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    synth::CorpusOptions o;
    o.images = false;
    o.train_per_class = 30;
    manifest_ = new DatasetManifest(synth::write_corpus(synth::scratch_dir("text_corpus"), o));
  }
  static void TearDownTestSuite() { delete manifest_; }

  static TextModelOptions options(std::size_t k) {
    TextModelOptions o;
    o.vocab_size = k;
    o.hidden_width = 16;
    o.train.epochs = 10;
    o.train.schedule.l_max = 0.5;
    o.train.batch_size = 8;
    o.train.seed = 3;
    return o;
  }

  static double test_accuracy(const nn::ModelArtifact& a) {
    TextModel model(a);
    std::size_t hits = 0, n = 0;
    for (const auto& r : manifest_->records) {
      if (r.split != Split::Test) continue;
      ++n;
      if (argmax_class(model.predict(read_record_text(*manifest_, r))) == r.label) ++hits;
    }
    return static_cast<double>(hits) / n;
  }

  static DatasetManifest* manifest_;
};
DatasetManifest* MarkerCorpus::manifest_ = nullptr;

TEST_F(MarkerCorpus, DecisionListOracleSeparates) {
  // A single word per class that occurs in every page of that class and in no other.
  std::map<std::string, std::set<ClassIndex>> classes_of;
  std::map<ClassIndex, std::map<std::string, int>> counts;
  std::map<ClassIndex, int> pages;
  for (const auto& r : manifest_->records) {
    pages[r.label]++;
    const auto toks = tokenize(read_record_text(*manifest_, r));
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) {
      classes_of[t].insert(r.label);
      counts[r.label][t]++;
    }
  }
  for (std::size_t c = 0; c < manifest_->label_set.size(); ++c) {
    bool found = false;
    for (const auto& [t, n] : counts[c]) found |= n == pages[c] && classes_of[t].size() == 1;
    EXPECT_TRUE(found) << "class " << c;
  }
}

TEST_F(MarkerCorpus, ReachesFullAccuracy) {
  EXPECT_EQ(test_accuracy(train_text_model(*manifest_, options(100))), 1.0);
}

TEST_F(MarkerCorpus, TinyVocabularyStaysWithinSanityBounds) {
  const double acc = test_accuracy(train_text_model(*manifest_, options(1)));
  EXPECT_GE(acc, 0.25 - 1e-12);
  EXPECT_LE(acc, 1.0);
}

TEST_F(MarkerCorpus, DeterministicAndVocabularyFromTrainOnly) {
  const auto a = train_text_model(*manifest_, options(100));
  const auto b = train_text_model(*manifest_, options(100));
  EXPECT_EQ(nn::serialize_model(a), nn::serialize_model(b));
  std::vector<Tokens> train_docs;
  for (const auto& r : filter_split(*manifest_, Split::Train).records)
    train_docs.push_back(tokenize(read_record_text(*manifest_, r)));
  EXPECT_EQ(a.vocabulary, build_vocabulary(train_docs, 100).words());
}

TEST_F(MarkerCorpus, PredictionDependsOnlyOnInVocabularySet) {
  TextModel model(train_text_model(*manifest_, options(100)));
  const auto empty = model.predict("");
  EXPECT_EQ(model.predict("zzzunknown qqq"), empty);
  EXPECT_EQ(model.predict("memo memo MEMO the"), model.predict("the memo"));
  double sum = 0;
  const auto scores = model.predict("letter of the day");
  for (double p : scores.values()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST_F(MarkerCorpus, MissingTextNamesRecord) {
  DatasetManifest m = *manifest_;
  m.records[2].text_path = "texts/absent.txt";
  try {
    train_text_model(m, options(10));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(m.records[2].id), std::string::npos);
  }
}

TEST(TextModel, RejectsImageArtifact) {
  nn::ModelArtifact a;
  a.spec = text_network_spec(3, 4, 2, 0);
  a = nn::ModelArtifact::capture(nn::Network(a.spec));
  a.metadata = {{"modality", "image"}};
  EXPECT_THROW(TextModel{a}, ModalityError);
}
