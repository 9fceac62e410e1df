#pragma once

// Generators for small on-disk corpora used by the tests.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/image/page_image.hpp"
#include "mmdoc/nn/rng.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::synth {

inline constexpr std::size_t kGlyphKinds = 6;

/// Dark glyph on a noisy white page. Position and size are jittered.
/// 0 square, 1 ring, 2 horizontal bar, 3 vertical bar, 4 diagonal cross, 5 triangle.
inline image::PageImage draw_glyph(std::size_t kind, std::size_t n, nn::Rng& rng) {
  image::PageImage img(n, n, 1, 255);
  const double N = static_cast<double>(n);
  const double cx = N / 2 + rng.uniform(-N / 10, N / 10);
  const double cy = N / 2 + rng.uniform(-N / 10, N / 10);
  const double s = rng.uniform(N / 5, N / 3.5);
  const double ink = rng.uniform(10, 60);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      bool on = false;
      switch (kind % kGlyphKinds) {
        case 0: on = std::abs(dx) < s && std::abs(dy) < s; break;
        case 1: {
          const double r = std::hypot(dx, dy);
          on = r < s && r > s * 0.6;
          break;
        }
        case 2: on = std::abs(dx) < s * 1.2 && std::abs(dy) < s * 0.3; break;
        case 3: on = std::abs(dx) < s * 0.3 && std::abs(dy) < s * 1.2; break;
        case 4: on = std::abs(dx) < s && std::abs(dy) < s && (std::abs(dx - dy) < s * 0.3 || std::abs(dx + dy) < s * 0.3); break;
        case 5: on = dy < s && dy > -s && std::abs(dx) < (dy + s) / 2; break;
      }
      const double noise = rng.uniform(-20, 20);
      const double v = (on ? ink : 245.0) + noise;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

inline const std::vector<std::string>& marker_words() {
  static const std::vector<std::string> w = {"invoice", "memo",   "letter",   "resume",  "report", "email",
                                             "form",    "budget", "handbook", "article", "news",   "survey",
                                             "folder",  "advert", "specs",    "notice"};
  return w;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {
      "the",    "of",      "and",   "page",    "company", "date",  "please", "number", "total", "from",
      "to",     "dear",    "sir",   "regards", "office",  "phone", "item",   "amount", "year",  "new",
      "review", "project", "state", "market",  "account", "list",  "file",   "copy",   "data",  "order"};
  return w;
}

/// Marker word once, surrounded by shared filler words.
inline std::string marker_text(std::size_t marker, nn::Rng& rng) {
  std::string out;
  const std::size_t len = 8 + rng.below(12);
  const std::size_t at = rng.below(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (!out.empty()) out += ' ';
    out += i == at ? marker_words()[marker % marker_words().size()]
                   : filler_words()[rng.below(filler_words().size())];
  }
  if (rng.below(2) == 0) out[0] = static_cast<char>(std::toupper(out[0]));
  return out + "\n";
}

struct CorpusOptions {
  std::size_t classes = 4;
  std::size_t train_per_class = 40;
  std::size_t validation_per_class = 10;
  std::size_t test_per_class = 10;
  std::size_t image_size = 48;
  bool images = true;
  bool texts = true;
  std::function<std::size_t(std::size_t)> glyph_of = [](std::size_t c) { return c; };
  std::function<std::size_t(std::size_t)> marker_of = [](std::size_t c) { return c; };
  std::uint64_t seed = 1;
};

/// 16 classes where class = 4a + b, the glyph encodes a and the marker word
/// encodes b. Either modality alone narrows a page to 4 candidate classes.
inline CorpusOptions xor_corpus_options(std::size_t per_class, std::uint64_t seed) {
  CorpusOptions o;
  o.classes = 16;
  o.train_per_class = per_class;
  o.validation_per_class = per_class / 4;
  o.test_per_class = per_class / 4;
  o.glyph_of = [](std::size_t c) { return c / 4; };
  o.marker_of = [](std::size_t c) { return c % 4; };
  o.seed = seed;
  return o;
}

/// Writes images/, texts/ and manifest.tsv under `dir` and returns the loaded
/// manifest. Records are interleaved by class.
inline DatasetManifest write_corpus(const std::filesystem::path& dir, const CorpusOptions& o) {
  nn::Rng rng(o.seed);
  DatasetManifest m;
  m.label_set = LabelSet::with_default_names(o.classes);
  const std::pair<Split, std::size_t> splits[] = {
      {Split::Train, o.train_per_class}, {Split::Validation, o.validation_per_class}, {Split::Test, o.test_per_class}};
  std::size_t serial = 0;
  for (const auto& [split, count] : splits) {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < o.classes; ++c) {
        PageRecord r;
        r.id = "p" + std::to_string(serial++);
        r.label = c;
        r.split = split;
        if (o.images) {
          r.image_path = "images/" + r.id + ".pgm";
          const auto bytes = image::encode_image(draw_glyph(o.glyph_of(c), o.image_size, rng), image::ImageFormat::Pgm);
          util::write_file(dir / *r.image_path, std::span<const std::uint8_t>(bytes));
        }
        if (o.texts) {
          r.text_path = "texts/" + r.id + ".txt";
          util::write_file(dir / *r.text_path, marker_text(o.marker_of(c), rng));
        }
        m.records.push_back(std::move(r));
      }
    }
  }
  save_manifest(m, dir / "manifest.tsv");
  return load_manifest(dir / "manifest.tsv");
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mmdoc_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mmdoc::synth
