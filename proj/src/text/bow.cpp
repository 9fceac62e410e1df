#include "mmdoc/text/bow.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::text {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw ValidationError("vocabulary contains an empty token");
    if (!index_.emplace(words_[i], i).second) throw ValidationError("duplicate vocabulary token '" + words_[i] + "'");
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<Tokens>& corpus, std::size_t k) {
  if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  if (k == 0) throw ValidationError("vocabulary size must be at least 1");
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& doc : corpus) {
    for (const auto& tok : std::set<std::string>(doc.begin(), doc.end())) ++doc_freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(doc_freq.begin(), doc_freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });  // map order = lexicographic
  std::vector<std::string> words;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) words.push_back(ranked[i].first);
  return Vocabulary(std::move(words));
}

std::string format_vocabulary(const Vocabulary& vocabulary) {
  std::string out;
  for (const auto& w : vocabulary.words()) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocabulary parse_vocabulary(std::string_view content) {
  std::vector<std::string> words;
  if (!content.empty() && content.back() == '\n') content.remove_suffix(1);
  if (content.empty()) return Vocabulary();
  for (auto line : util::split(content, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    words.emplace_back(line);
  }
  return Vocabulary(std::move(words));
}

std::vector<double> BowVector::dense() const {
  std::vector<double> out(dimension, 0.0);
  for (auto i : present) out[i] = 1.0;
  return out;
}

BowVector vectorize(const Vocabulary& vocabulary, const Tokens& tokens) {
  BowVector v;
  v.dimension = vocabulary.size();
  for (const auto& t : tokens) {
    if (auto idx = vocabulary.index_of(t)) v.present.push_back(*idx);
  }
  std::sort(v.present.begin(), v.present.end());
  v.present.erase(std::unique(v.present.begin(), v.present.end()), v.present.end());
  return v;
}

}  // namespace mmdoc::text
