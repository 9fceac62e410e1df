#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mmdoc::text {

using Tokens = std::vector<std::string>;

/// Lowercases ASCII letters and splits on every character that is not an
/// ASCII letter or digit. Bytes >= 0x80 count as word characters so UTF-8
/// sequences stay inside their token. Empty tokens are dropped.
Tokens tokenize(std::string_view text);

/// Top-K word list; position in `words()` is the feature index.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> index_of(std::string_view token) const;

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps the K tokens with the highest document frequency (number of
/// documents containing the token), ties broken lexicographically. Fewer
/// than K distinct tokens yields a smaller vocabulary.
Vocabulary build_vocabulary(const std::vector<Tokens>& corpus, std::size_t k);

/// Vocabulary file: one token per line, line number = index.
std::string format_vocabulary(const Vocabulary& vocabulary);
Vocabulary parse_vocabulary(std::string_view content);

/// Binary presence vector stored as the sorted set of present indices.
struct BowVector {
  std::size_t dimension = 0;
  std::vector<std::size_t> present;

  std::vector<double> dense() const;
  bool operator==(const BowVector&) const = default;
};

BowVector vectorize(const Vocabulary& vocabulary, const Tokens& tokens);

}  // namespace mmdoc::text
