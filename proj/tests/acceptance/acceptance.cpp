// Runs the nine acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "gradcheck_cases.hpp"
#include "mmdoc/audit/audit.hpp"
#include "mmdoc/cli/commands.hpp"
#include "mmdoc/cli/config.hpp"
#include "mmdoc/fusion/evaluate.hpp"
#include "mmdoc/fusion/forest.hpp"
#include "mmdoc/fusion/meta.hpp"
#include "mmdoc/image/image_model.hpp"
#include "mmdoc/image/transform.hpp"
#include "mmdoc/ingest/ocr.hpp"
#include "mmdoc/nn/model_io.hpp"
#include "mmdoc/nn/train.hpp"
#include "mmdoc/text/bow.hpp"
#include "mmdoc/text/text_model.hpp"
#include "mmdoc/util/io.hpp"
#include "planted_duplicates.hpp"
#include "synthetic.hpp"

using namespace mmdoc;
namespace fs = std::filesystem;

namespace {

// Collects failed checks; a criterion passes when none failed.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  bool expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
    return ok;
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double test_accuracy(const fusion::BatchPredictor& p, const DatasetManifest& m) {
  return fusion::evaluate(p, m, Split::Test).accuracy;
}

fusion::BatchPredictor predictor(const fusion::Component& c) {
  return [&c](const DatasetManifest& m, std::span<const PageRecord> r) { return c.predict(m, r); };
}

// ------------------------------------------------------------------ 1
void schedule_exactness(Check& c) {
  for (auto [lmax, lmin] : {std::pair{0.002, 1e-6}, std::pair{0.01, 1e-6}}) {
    for (std::size_t n : {1u, 7u, 100u}) {
      const nn::CosineBatchSchedule s{lmax, lmin, n};
      const std::string tag = "(" + fmt("%g", lmax) + ", N=" + std::to_string(n) + ")";
      c.expect(s.rate(0) == lmax, "rate(0) != l_max " + tag);
      c.expect(s.rate(n) == lmin, "rate(N) != l_min " + tag);
      for (std::size_t k = 1; k <= n; ++k) c.expect(s.rate(k) <= s.rate(k - 1), "increase at k=" + std::to_string(k) + " " + tag);
      // The curve is symmetric about its midpoint value: rate(k) + rate(N-k)
      // is l_max + l_min for every k, and equals twice rate(N/2) for even N.
      const double mid = (lmax + lmin) / 2;
      for (std::size_t k = 0; k <= n; ++k) {
        c.expect(std::abs((s.rate(k) + s.rate(n - k)) / 2 - mid) <= 1e-15, "asymmetric at k=" + std::to_string(k) + " " + tag);
      }
      if (n % 2 == 0) c.expect(std::abs(s.rate(n / 2) - mid) <= 1e-15, "midpoint " + tag);
    }
  }
}

// ------------------------------------------------------------------ 2
void gradient_oracle(Check& c) {
  double worst = 0;
  for (auto kind : testing::all_checked_kinds()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto gc = testing::make_grad_case(kind, seed);
      nn::Network net(gc.spec);
      const auto r = testing::check_gradients(net, gc.batch, gc.labels, 1e-5);
      worst = std::max({worst, r.max_param_error, r.max_input_error});
      c.expect(r.max_param_error < 1e-4 && r.max_input_error < 1e-4,
               testing::kind_name(kind) + " seed " + std::to_string(seed) + " error " +
                   fmt("%.3g", std::max(r.max_param_error, r.max_input_error)));
    }
  }
  c.note("max relative error " + fmt("%.2e", worst));
}

// ------------------------------------------------------------------ 3
void fusion_lift(Check& c) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto o = synth::xor_corpus_options(200, seed);
    o.image_size = 24;
    const auto m = synth::write_corpus(synth::scratch_dir("accept_xor"), o);

    image::ImageModelOptions io;
    io.side = 24;
    io.widths = {{4, 8, 8}, 16, 16};
    io.train.epochs = 5;
    io.train.schedule.l_max = 0.05;
    io.train.seed = seed;
    io.augmentation = image::AugmentationPolicy::none();
    text::TextModelOptions to;
    to.vocab_size = 100;
    to.hidden_width = 16;
    to.train.epochs = 10;
    to.train.schedule.l_max = 0.5;
    to.train.seed = seed;

    std::vector<fusion::Component> comps;
    comps.emplace_back("image", image::train_image_model(m, io));
    comps.emplace_back("text", text::train_text_model(m, to));
    fusion::FusionConfig fc;
    fc.seed = seed;
    const auto forest = fusion::train_meta(comps, m, fc);

    const double img = test_accuracy(predictor(comps[0]), m);
    const double txt = test_accuracy(predictor(comps[1]), m);
    const double fused = test_accuracy(
        [&](const DatasetManifest& mm, std::span<const PageRecord> r) { return fusion::predict_fused(forest, comps, mm, r); }, m);
    const std::string tag = "seed " + std::to_string(seed);
    c.expect(img <= 0.60, tag + " image " + fmt("%.4f", img) + " > 0.60");
    c.expect(txt <= 0.60, tag + " text " + fmt("%.4f", txt) + " > 0.60");
    c.expect(fused >= 0.90, tag + " fused " + fmt("%.4f", fused) + " < 0.90");
    c.expect(fused - std::max(img, txt) >= 0.10, tag + " lift below 10 points");
    for (const auto& round : forest.trees)
      for (const auto& t : round) c.expect(t.depth() <= 3, tag + " tree deeper than 3");
    c.note(tag + ": image " + fmt("%.4f", img) + " text " + fmt("%.4f", txt) + " fused " + fmt("%.4f", fused));
  }
}

// ------------------------------------------------------------------ 4
// Independent traversal: longest root-to-leaf path counted in internal nodes.
std::size_t traverse_depth(const fusion::Tree& t, std::size_t node = 0) {
  const auto& n = t.nodes.at(node);
  if (n.leaf) return 0;
  return 1 + std::max(traverse_depth(t, n.left), traverse_depth(t, n.right));
}

void boosting_oracle(Check& c) {
  // x = 0,1,2,3 with labels 0,0,1,1. At base score 0 every p is 1/2, so for
  // class 0: g = p - y = (-1/2,-1/2,1/2,1/2), h = 1/4. The best split is
  // x < 1.5 with G_L = -1, H_L = 1/2, G_R = 1, H_R = 1/2:
  //   gain = 1/2 (1/0.5 + 1/0.5 - 0/1) = 2, leaves -G/H = 2 and -2.
  // Class 1 mirrors it. Children have constant gradients so no further split.
  fusion::FeatureMatrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x.row(i)[0] = static_cast<double>(i);
  const std::vector<ClassIndex> y{0, 0, 1, 1};
  const auto forest = fusion::fit_forest(x, y, 2, {3, 1, 1.0, 1});
  c.expect(forest.rounds() == 1 && forest.trees[0].size() == 2, "expected one round of two trees");
  for (std::size_t k = 0; k < 2 && c.failures.empty(); ++k) {
    const auto& t = forest.trees[0][k];
    const double sign = k == 0 ? 1.0 : -1.0;
    c.expect(t.nodes.size() == 3, "class " + std::to_string(k) + ": expected 3 nodes");
    if (t.nodes.size() != 3) continue;
    c.expect(!t.nodes[0].leaf && t.nodes[0].feature == 0 && t.nodes[0].threshold == 1.5 && t.nodes[0].gain == 2.0,
             "class " + std::to_string(k) + ": root split");
    c.expect(t.nodes[t.nodes[0].left].leaf && t.nodes[t.nodes[0].left].value == 2.0 * sign,
             "class " + std::to_string(k) + ": left leaf");
    c.expect(t.nodes[t.nodes[0].right].leaf && t.nodes[t.nodes[0].right].value == -2.0 * sign,
             "class " + std::to_string(k) + ": right leaf");
  }
  // Fused prediction at x=0: margins (2,-2) -> p0 = 1/(1+e^-4).
  const std::vector<double> x0{0.0};
  const auto p = forest.predict(x0);
  c.expect(std::abs(p[0] - 1.0 / (1.0 + std::exp(-4.0))) < 1e-15, "prediction at x=0");

  // Depth cap on randomized forests.
  nn::Rng rng(17);
  std::size_t trees = 0;
  for (int f = 0; f < 5; ++f) {
    fusion::FeatureMatrix fx(120, 8);
    std::vector<ClassIndex> fy(120);
    for (auto& v : fx.data) v = rng.uniform();
    for (auto& v : fy) v = rng.below(4);
    const auto forest_r = fusion::fit_forest(fx, fy, 4, {3, 15, 0.3, 1});
    for (const auto& round : forest_r.trees)
      for (const auto& t : round) {
        ++trees;
        c.expect(traverse_depth(t) <= 3, "random forest tree deeper than 3");
        for (const auto& n : t.nodes) c.expect(n.leaf || n.gain > 0, "non-positive split gain");
      }
  }
  c.note(std::to_string(trees) + " random trees traversed");
}

// ------------------------------------------------------------------ 5
void bow_contracts(Check& c) {
  const text::Vocabulary v({"a", "b", "c"});
  c.expect(text::vectorize(v, {"a", "c", "a"}).dense() == std::vector<double>{1, 0, 1}, "[a,c,a] -> [1,0,1]");
  c.expect(text::vectorize(v, {"z"}).dense() == std::vector<double>{0, 0, 0}, "[z] -> [0,0,0]");
  c.expect(text::vectorize(v, {}).dense() == std::vector<double>{0, 0, 0}, "[] -> [0,0,0]");

  nn::Rng rng(99);
  std::vector<text::Tokens> corpus(300);
  for (auto& doc : corpus) {
    const std::size_t len = 1 + rng.below(30);
    // Zipf-like draw over 400 words so frequencies tie and differ.
    for (std::size_t i = 0; i < len; ++i) doc.push_back("w" + std::to_string(static_cast<std::size_t>(400 * std::pow(rng.uniform(), 3))));
  }
  const auto full = text::build_vocabulary(corpus, 1000);
  for (std::size_t k1 : {1u, 5u, 37u, 100u, 250u}) {
    const auto small = text::build_vocabulary(corpus, k1);
    c.expect(std::equal(small.words().begin(), small.words().end(), full.words().begin()),
             "K=" + std::to_string(k1) + " is not a prefix");
  }
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = corpus;
    rng.shuffle(std::span<text::Tokens>(shuffled));
    c.expect(text::build_vocabulary(shuffled, 150) == text::build_vocabulary(corpus, 150), "order dependence");
  }
  c.note("vocabulary of " + std::to_string(full.size()) + " words");
}

// ------------------------------------------------------------------ 6
void single_modality(Check& c) {
  {
    synth::CorpusOptions o;
    o.images = false;
    const auto m = synth::write_corpus(synth::scratch_dir("accept_text"), o);
    text::TextModelOptions to;
    to.vocab_size = 100;
    to.hidden_width = 16;
    to.train.epochs = 10;
    to.train.batch_size = 8;
    to.train.schedule.l_max = 0.5;
    to.train.seed = 3;
    const fusion::Component comp("text", text::train_text_model(m, to));
    const double acc = test_accuracy(predictor(comp), m);
    c.expect(acc == 1.0, "text accuracy " + fmt("%.4f", acc) + " < 1");
    c.note("text " + fmt("%.4f", acc));
  }
  {
    synth::CorpusOptions o;
    o.texts = false;
    o.image_size = 64;
    o.test_per_class = 25;
    const auto m = synth::write_corpus(synth::scratch_dir("accept_image"), o);
    image::ImageModelOptions io;
    io.preset = image::CnnPreset::MiniAlexNetBN;
    io.side = 64;
    io.augmentation.seed = 6;
    io.train.seed = 6;
    io.train.epochs = 20;
    const fusion::Component comp("image", image::train_image_model(m, io));
    const double acc = test_accuracy(predictor(comp), m);
    c.expect(acc >= 0.95, "image accuracy " + fmt("%.4f", acc) + " < 0.95");
    c.note("image " + fmt("%.4f", acc));
  }
}

// ------------------------------------------------------------------ 7
void audit_fixture(Check& c) {
  const auto m = synth::write_planted_duplicates(synth::scratch_dir("accept_audit"));
  const auto rep = audit::find_text_duplicates(m);
  c.expect(audit::format_audit_table(rep) == synth::kPlantedTable, "report differs from the expected bytes");
  const std::map<ClassIndex, std::size_t> expected(synth::kPlantedCounts.begin(), synth::kPlantedCounts.end());
  c.expect(rep.per_class_counts == expected, "per-class counts");
  c.expect(rep.total_duplicate_instances == 426, "total");
  const auto bad = audit::cross_split_contamination(rep);
  c.expect(bad.size() == 1 && !rep.groups.empty() && bad[0].key == rep.groups[0].key &&
               bad[0].key == util::sha256_hex("image not available"),
           "contamination does not flag exactly the planted group");
  std::map<Split, std::size_t> splits;
  if (bad.size() == 1)
    for (const auto& mem : bad[0].members) ++splits[mem.split];
  c.expect(splits == std::map<Split, std::size_t>{{Split::Train, 373}, {Split::Test, 53}}, "split breakdown");
}

// ------------------------------------------------------------------ 8
std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = util::read_file(e.path());
  }
  return out;
}

void determinism(Check& c) {
  const auto base = synth::scratch_dir("accept_e2e");
  synth::CorpusOptions o;
  o.train_per_class = 20;
  o.validation_per_class = 5;
  o.test_per_class = 5;
  o.image_size = 32;
  auto m = synth::write_corpus(base / "corpus", o);
  // Every third page arrives without text and goes through the OCR stub.
  for (std::size_t i = 0; i < m.records.size(); i += 3) m.records[i].text_path.reset();
  save_manifest(m, base / "corpus" / "manifest.tsv");

  const nlohmann::json cfg{
      {"manifest", "corpus/manifest.tsv"},
      {"output_dir", "run"},
      {"seed", 21},
      {"text", {{"vocab_sizes", {50, 200}}, {"hidden_width", 16}, {"epochs", 5}, {"batch_size", 8}, {"l_max", 0.5}}},
      {"image",
       {{"side", 32}, {"conv_widths", {4, 8, 8}}, {"dense_widths", {16, 16}}, {"epochs", 2}, {"batch_size", 16},
        {"augmentation", {{"salt_pepper_fraction", 0.01}}}}},
      {"fusion", {{"rounds", 20}, {"oof_folds", 3}}},
      {"ocr", {{"command_template", "cksum {input} | cut -d ' ' -f 1 > {output}"}, {"longest_side_px", 48}}}};
  util::write_file(base / "run.json", cfg.dump(2));

  auto pipeline = [&]() {
    std::ostringstream log;
    const auto first = cli::load_run_config(base / "run.json");
    c.expect(cli::cmd_extract(first, log) == cli::kExitOk, "extract failed");
    cli::Overrides ov;
    ov.manifest = first.output_dir / cli::kExtractedManifest;
    const auto cfg2 = cli::load_run_config(base / "run.json", ov);
    c.expect(cli::cmd_train(cfg2, cli::TrainTarget::All, log) == cli::kExitOk, "train failed");
    const auto dir = cfg2.output_dir;
    c.expect(cli::cmd_fuse(cfg2, {dir / "image_mini_alexnet_bn_s32.model", dir / "text_bow200.model"}, log) == cli::kExitOk,
             "fuse failed");
    c.expect(cli::cmd_evaluate(cfg2, {dir / cli::kForestFile, dir / "text_bow50.model"}, std::nullopt, log) ==
                 cli::kExitOk,
             "evaluate failed");
    c.expect(cli::cmd_audit(cfg2, audit::Method::Text, log) != cli::kExitRuntime, "audit failed");
    return log.str();
  };
  const auto log1 = pipeline();
  fs::rename(base / "run", base / "run_first");
  const auto log2 = pipeline();
  const auto a = read_tree(base / "run_first"), b = read_tree(base / "run");
  c.expect(log1 == log2, "console output differs");
  c.expect(a.size() == b.size(), "different file sets");
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    c.expect(it != b.end() && it->second == bytes, "differs: " + name);
  }
  c.note(std::to_string(a.size()) + " output files identical");

  // Save/load round trip keeps predictions bitwise.
  const auto run = load_manifest(base / "run" / cli::kExtractedManifest);
  const auto test = filter_split(run, Split::Test);
  for (const char* name : {"image_mini_alexnet_bn_s32.model", "text_bow200.model"}) {
    const auto artifact = nn::load_model(base / "run" / name);
    c.expect(nn::serialize_model(artifact) == util::read_file(base / "run" / name), std::string("reserialize ") + name);
    nn::save_model(artifact, base / "copy.model");
    const fusion::Component original("x", artifact), reloaded("x", nn::load_model(base / "copy.model"));
    const auto p = original.predict(run, test.records), q = reloaded.predict(run, test.records);
    bool same = p.size() == q.size();
    for (std::size_t i = 0; same && i < p.size(); ++i) {
      same = std::equal(p[i].values().begin(), p[i].values().end(), q[i].values().begin(), q[i].values().end());
    }
    c.expect(same, std::string("round trip changes predictions of ") + name);
  }
}

// ------------------------------------------------------------------ 9
void preprocessing(Check& c) {
  nn::Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t w = 1 + rng.below(40), h = 1 + rng.below(40), ch = rng.below(2) ? 3 : 1;
    image::PageImage img(w, h, ch);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    if (i == 0) std::fill(img.pixels.begin(), img.pixels.end(), 0);
    if (i == 1) std::fill(img.pixels.begin(), img.pixels.end(), 255);
    const auto t = image::preprocess(img, 1 + rng.below(32));
    const auto [lo, hi] = std::minmax_element(t.data.begin(), t.data.end());
    if (!c.expect(*lo >= -1.0 && *hi <= 1.0, "value outside [-1,1] in image " + std::to_string(i))) break;
  }

  auto dims = [](const image::PageImage& p) { return std::pair{p.width, p.height}; };
  c.expect(dims(ingest::resize_for_ocr(image::PageImage(1100, 850, 1, 255), 3300)) == std::pair<std::size_t, std::size_t>{3300, 2550},
           "1100x850 -> 3300x2550");
  c.expect(dims(ingest::resize_for_ocr(image::PageImage(850, 1100, 1, 255), 3300)) == std::pair<std::size_t, std::size_t>{2550, 3300},
           "850x1100 -> 2550x3300");
  image::PageImage letter(3300, 2550, 1);
  for (std::size_t i = 0; i < letter.pixels.size(); ++i) letter.pixels[i] = static_cast<std::uint8_t>(i * 2654435761u >> 24);
  c.expect(ingest::resize_for_ocr(letter, 3300) == letter, "3300x2550 is not a fixed point");
  for (int i = 0; i < 300; ++i) {
    const std::size_t w = 1 + rng.below(1200), h = 1 + rng.below(1200), target = 1 + rng.below(1500);
    const auto out = ingest::resize_for_ocr(image::PageImage(w, h, 1), target);
    const double exact = static_cast<double>(std::min(w, h)) * static_cast<double>(target) / static_cast<double>(std::max(w, h));
    const double other = static_cast<double>(w >= h ? out.height : out.width);
    c.expect(std::max(out.width, out.height) == target && std::abs(other - std::max(exact, 1.0)) <= 0.5,
             "aspect ratio " + std::to_string(w) + "x" + std::to_string(h));
  }

  image::PageImage page(37, 23, 3);
  for (auto& p : page.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (int i = 0; i < 20; ++i) {
    auto policy = image::AugmentationPolicy::none();
    policy.seed = static_cast<std::uint64_t>(i);
    nn::Rng r(static_cast<std::uint64_t>(i));
    c.expect(image::augment(page, policy, r) == page, "identity augmentation changed the image");
  }

  const image::AugmentationPolicy standard;  // +-10 degrees shear, +-5 rotation
  nn::Rng draws(2024);
  double max_shear = 0, max_rot = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = image::sample_angles(standard, draws);
    max_shear = std::max(max_shear, std::abs(a.shear_deg));
    max_rot = std::max(max_rot, std::abs(a.rotation_deg));
  }
  c.expect(max_shear <= 10.0 && max_rot <= 5.0, "angle draw out of bounds");
  c.expect(max_shear > 9.5 && max_rot > 4.75, "angle draws do not cover the range");
  c.note("max |shear| " + fmt("%.3f", max_shear) + ", max |rotation| " + fmt("%.3f", max_rot));
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "schedule exactness", 1, schedule_exactness},
      {2, "gradient oracle", 30, gradient_oracle},
      {3, "fusion lift on XOR-modality corpus", 300, fusion_lift},
      {4, "boosting oracle and depth cap", 1, boosting_oracle},
      {5, "bag-of-words contracts", 5, bow_contracts},
      {6, "single-modality sanity", 300, single_modality},
      {7, "audit fixture", 5, audit_fixture},
      {8, "end-to-end determinism", 600, determinism},
      {9, "preprocessing contracts", 30, preprocessing},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) check.failures.push_back("runtime " + fmt("%.1f", secs) + " s over budget " + fmt("%.0f", cr.budget_s) + " s");
    const bool ok = check.failures.empty();
    failed += ok ? 0 : 1;
    std::string detail;
    for (const auto& n : check.notes) detail += (detail.empty() ? "" : "; ") + n;
    if (!ok) {
      detail += (detail.empty() ? "" : "; ") + check.failures.front();
      if (check.failures.size() > 1) detail += " (+" + std::to_string(check.failures.size() - 1) + " more)";
    }
    std::printf("[%s] %d %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs, detail.empty() ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
