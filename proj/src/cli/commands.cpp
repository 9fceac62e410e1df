#include "mmdoc/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "mmdoc/core/error.hpp"
#include "mmdoc/fusion/evaluate.hpp"
#include "mmdoc/fusion/forest.hpp"
#include "mmdoc/fusion/meta.hpp"
#include "mmdoc/nn/model_io.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNoSplit = std::numeric_limits<double>::quiet_NaN();

void make_output_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir)) throw IoError("cannot create output directory " + c.output_dir.string());
}

std::string percent(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

void append_run_log(const RunConfig& c, const std::string& artifact, const std::string& modality,
                    const nlohmann::json& options, double val_accuracy) {
  const auto path = c.output_dir / kRunLog;
  const bool fresh = !fs::exists(path);
  const nlohmann::json identity{{"modality", modality},
                                {"options", options},
                                {"manifest", util::sha256_hex(util::read_file(c.manifest))}};
  const auto hash = util::sha256_hex(identity.dump()).substr(0, 16);
  std::ofstream log(path, std::ios::app | std::ios::binary);
  if (!log) throw IoError("cannot append to " + path.string());
  if (fresh) log << "artifact\tmodality\tconfig_hash\tseed\tvalidation_accuracy\n";
  log << artifact << '\t' << modality << '\t' << hash << '\t' << c.seed << '\t'
      << (std::isnan(val_accuracy) ? std::string("-") : util::format_double(val_accuracy)) << '\n';
  if (!log) throw IoError("cannot append to " + path.string());
}

void require_modality(const fusion::Component& comp, std::span<const PageRecord> records) {
  const bool text = comp.modality() == "text";
  for (const auto& r : records) {
    if (text ? !r.text_path : !r.image_path) {
      throw ModalityError("component '" + comp.name() + "' is a " + comp.modality() + " model but record '" + r.id +
                          "' has no " + (text ? "text" : "image"));
    }
  }
}

// NaN when the split is empty.
double accuracy_on(const fusion::BatchPredictor& predict, const DatasetManifest& m, Split split) {
  if (filter_split(m, split).records.empty()) return kNoSplit;
  return fusion::evaluate(predict, m, split).accuracy;
}

fusion::BatchPredictor component_predictor(const fusion::Component& c) {
  return [&c](const DatasetManifest& m, std::span<const PageRecord> recs) {
    require_modality(c, recs);
    return c.predict(m, recs);
  };
}

fusion::BatchPredictor fused_predictor(const fusion::BoostedForest& forest, const std::vector<fusion::Component>& comps) {
  return [&forest, &comps](const DatasetManifest& m, std::span<const PageRecord> recs) {
    for (const auto& c : comps) require_modality(c, recs);
    return fusion::predict_fused(forest, comps, m, recs);
  };
}

fusion::Component load_component(const fs::path& path) {
  return fusion::Component(path.stem().string(), nn::load_model(path));
}

std::string join_names(const std::vector<fusion::Component>& comps, const std::string& modality) {
  std::string out;
  for (const auto& c : comps) {
    if (c.modality() != modality) continue;
    out += (out.empty() ? "" : "+") + c.name();
  }
  return out.empty() ? "-" : out;
}

fusion::ResultRow row_for(const fusion::Component& c) {
  return {c.modality() == "image" ? c.name() : "-", c.modality() == "text" ? c.name() : "-", 0, 0};
}

void write_report(const RunConfig& c, const std::string& stem, const fusion::EvaluationReport& rep,
                  const DatasetManifest& m, std::ostream& out) {
  const std::string base = stem + "_" + std::string(to_string(rep.split));
  const auto text = fusion::format_report(rep, m.label_set);
  util::write_file(c.output_dir / (base + ".txt"), text);
  util::write_file(c.output_dir / (base + ".tsv"), fusion::format_report_tsv(rep, m.label_set));
  out << "== " << stem << " ==\n" << text << "\n";
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ModalityError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    return kExitValidation;
  }
  return kExitRuntime;
}

std::string text_artifact_name(std::size_t k) { return "text_bow" + std::to_string(k) + ".model"; }

std::string image_artifact_name(const image::ImageModelOptions& o) {
  return "image_" + image::to_string(o.preset) + "_s" + std::to_string(o.side) + ".model";
}

int cmd_extract(const RunConfig& c, std::ostream& out) {
  const auto manifest = load_manifest(c.manifest);
  make_output_dir(c);
  const auto summary = ingest::extract_corpus(manifest, c.ocr, c.output_dir / kTextDir);
  util::write_file(c.output_dir / kExtractionSummary, ingest::format_extraction_summary(summary));
  save_manifest(summary.manifest, c.output_dir / kExtractedManifest);
  out << summary.extracted << " extracted, " << summary.skipped << " skipped, " << summary.failed << " failed\n";
  for (const auto& e : summary.entries) {
    if (e.status == ingest::ExtractionStatus::Failed) out << "failed: " << e.id << ": " << e.detail << "\n";
  }
  out << "manifest: " << (c.output_dir / kExtractedManifest).string() << "\n";
  return summary.failed == 0 ? kExitOk : kExitPartial;
}

TrainTarget parse_train_target(std::string_view t) {
  if (t == "text") return TrainTarget::Text;
  if (t == "image") return TrainTarget::Image;
  if (t == "all") return TrainTarget::All;
  throw ValidationError("unknown modality '" + std::string(t) + "' (expected text, image or all)");
}

int cmd_train(const RunConfig& c, TrainTarget target, std::ostream& out) {
  const auto manifest = load_manifest(c.manifest);
  make_output_dir(c);
  auto report = [&](const nn::ModelArtifact& artifact, const std::string& name, const nlohmann::json& options) {
    nn::save_model(artifact, c.output_dir / name);
    const fusion::Component comp(fs::path(name).stem().string(), artifact);
    const double val = accuracy_on(component_predictor(comp), manifest, Split::Validation);
    append_run_log(c, name, comp.modality(), options, val);
    out << name << ": validation accuracy " << percent(val) << "\n";
  };
  if (target != TrainTarget::Image) {
    for (auto k : c.vocab_sizes) {
      auto o = c.text;
      o.vocab_size = k;
      report(text::train_text_model(manifest, o), text_artifact_name(k), text::to_json(o));
    }
  }
  if (target != TrainTarget::Text) {
    report(image::train_image_model(manifest, c.image), image_artifact_name(c.image), image::to_json(c.image));
  }
  return kExitOk;
}

int cmd_fuse(const RunConfig& c, const std::vector<fs::path>& artifacts, std::ostream& out) {
  std::vector<fs::path> paths = artifacts;
  if (paths.empty()) {
    for (const auto& name : c.fusion.components) paths.push_back(c.output_dir / (name + ".model"));
  }
  if (paths.empty()) throw ValidationError("no component artifacts given (pass paths or set fusion.components)");
  if (paths.size() < 2 && !c.fusion.allow_single_component) {
    throw ValidationError("fusion needs at least 2 components (set fusion.allow_single_component to override)");
  }
  const auto manifest = load_manifest(c.manifest);
  std::vector<fusion::Component> comps;
  for (const auto& p : paths) comps.push_back(load_component(p));
  make_output_dir(c);

  const auto forest = fusion::train_meta(comps, manifest, c.fusion);
  util::write_file(c.output_dir / kForestFile, fusion::format_forest(forest));

  std::vector<fusion::ResultRow> rows;
  for (const auto& comp : comps) {
    auto row = row_for(comp);
    const auto predict = component_predictor(comp);
    row.validation_accuracy = accuracy_on(predict, manifest, Split::Validation);
    row.test_accuracy = accuracy_on(predict, manifest, Split::Test);
    rows.push_back(row);
  }
  fusion::ResultRow fused{join_names(comps, "image"), join_names(comps, "text"), 0, 0};
  const auto predict = fused_predictor(forest, comps);
  fused.validation_accuracy = accuracy_on(predict, manifest, Split::Validation);
  fused.test_accuracy = accuracy_on(predict, manifest, Split::Test);
  rows.push_back(fused);

  const auto table = fusion::format_results_table(rows);
  util::write_file(c.output_dir / kFusionReport, table);
  util::write_file(c.output_dir / kFusionReportTsv, fusion::format_results_tsv(rows));
  out << "forest: " << (c.output_dir / kForestFile).string() << " (" << forest.features << " features, "
      << forest.rounds() << " rounds)\n"
      << table;
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c, const std::vector<fs::path>& artifacts, std::optional<Split> split,
                 std::ostream& out) {
  if (artifacts.empty()) throw ValidationError("evaluate needs at least one artifact");
  const auto manifest = load_manifest(c.manifest);

  struct Target {
    std::string stem;
    std::vector<fusion::Component> comps;
    std::optional<fusion::BoostedForest> forest;
  };
  std::vector<Target> targets;
  for (const auto& p : artifacts) {
    Target t{p.stem().string(), {}, std::nullopt};
    if (p.extension() == ".forest") {
      t.forest = fusion::parse_forest(util::read_file(p));
      for (const auto& name : t.forest->components) t.comps.push_back(load_component(p.parent_path() / (name + ".model")));
    } else {
      t.comps.push_back(load_component(p));
    }
    targets.push_back(std::move(t));
  }
  make_output_dir(c);

  const std::vector<Split> splits = split ? std::vector<Split>{*split} : std::vector<Split>{Split::Validation, Split::Test};
  std::vector<fusion::ResultRow> rows;
  for (const auto& t : targets) {
    const auto predict = t.forest ? fused_predictor(*t.forest, t.comps) : component_predictor(t.comps[0]);
    fusion::ResultRow row = t.forest ? fusion::ResultRow{join_names(t.comps, "image"), join_names(t.comps, "text"), 0, 0}
                                     : row_for(t.comps[0]);
    row.validation_accuracy = row.test_accuracy = kNoSplit;
    for (auto s : splits) {
      if (!split && filter_split(manifest, s).records.empty()) continue;
      const auto rep = fusion::evaluate(predict, manifest, s);
      write_report(c, t.stem, rep, manifest, out);
      (s == Split::Test ? row.test_accuracy : row.validation_accuracy) = rep.accuracy;
    }
    rows.push_back(row);
  }
  out << fusion::format_results_table(rows);
  return kExitOk;
}

std::string format_contamination(const std::vector<audit::DuplicateGroup>& groups) {
  std::string out = "cross-split groups: " + std::to_string(groups.size()) + "\n";
  for (const auto& g : groups) {
    std::map<Split, std::size_t> per;
    for (const auto& m : g.members) ++per[m.split];
    out += g.key;
    for (const auto& [s, n] : per) out += " " + std::string(to_string(s)) + "=" + std::to_string(n);
    out += "\n";
  }
  return out;
}

int cmd_audit(const RunConfig& c, audit::Method method, std::ostream& out) {
  const auto manifest = load_manifest(c.manifest);
  make_output_dir(c);
  const auto rep = method == audit::Method::Text ? audit::find_text_duplicates(manifest)
                                                 : audit::find_image_duplicates(manifest);
  const auto contaminated = audit::cross_split_contamination(rep);
  const std::string stem = method == audit::Method::Text ? "audit_text" : "audit_image";
  std::string text = audit::format_audit_table(rep) + "\n" + format_contamination(contaminated);
  for (const auto& issue : rep.issues) text += "unreadable: " + issue.id + ": " + issue.detail + "\n";
  util::write_file(c.output_dir / (stem + ".txt"), text);
  util::write_file(c.output_dir / (stem + ".tsv"), audit::format_audit_tsv(rep, manifest.label_set));
  out << text;
  return contaminated.empty() ? kExitOk : kExitContaminated;
}

}  // namespace mmdoc::cli
