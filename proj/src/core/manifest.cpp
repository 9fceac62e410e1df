#include "mmdoc/core/manifest.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc {

namespace {

constexpr std::string_view kLabelsHeader = "#labels:";

std::optional<std::filesystem::path> parse_path(std::string_view field) {
  if (field == "-" || field.empty()) return std::nullopt;
  return std::filesystem::path(std::string(field));
}

std::string path_field(const std::optional<std::filesystem::path>& p) {
  return p ? p->generic_string() : std::string("-");
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  if (p.is_absolute() || root.empty()) return p;
  return root / p;
}

const PageRecord& DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records) {
    if (r.id == id) return r;
  }
  throw ValidationError("no record with id '" + id + "'");
}

void validate_manifest(const DatasetManifest& manifest) {
  const std::size_t c = manifest.label_set.size();
  if (c == 0) throw ValidationError("manifest declares no labels");
  std::set<std::string> ids;
  for (const auto& r : manifest.records) {
    if (r.id.empty()) throw ValidationError("record with empty id");
    if (!ids.insert(r.id).second) throw ValidationError("duplicate record id '" + r.id + "'");
    if (r.label >= c) {
      throw ValidationError("record '" + r.id + "' label " + std::to_string(r.label) +
                            " out of range for " + std::to_string(c) + " classes");
    }
    if (!r.image_path && !r.text_path) {
      throw ValidationError("record '" + r.id + "' has neither image nor text path");
    }
  }
}

DatasetManifest parse_manifest(const std::string& content, std::filesystem::path root) {
  DatasetManifest manifest;
  manifest.root = std::move(root);
  bool have_labels = false;
  std::size_t line_no = 0;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    if (view.starts_with(kLabelsHeader)) {
      if (have_labels) throw ParseError("duplicate #labels header at line " + std::to_string(line_no));
      std::vector<std::string> names;
      for (auto name : util::split(util::trim(view.substr(kLabelsHeader.size())), ',')) {
        names.emplace_back(util::trim(name));
      }
      manifest.label_set = LabelSet(std::move(names));
      have_labels = true;
      continue;
    }
    if (util::trim(view).empty() || view.front() == '#') continue;

    auto fields = util::split(view, '\t');
    if (fields.size() != 5) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    PageRecord record;
    record.id = std::string(fields[0]);
    try {
      record.split = parse_split(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    std::size_t label = 0;
    auto [end, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), label);
    if (ec != std::errc() || end != fields[2].data() + fields[2].size()) {
      throw ParseError("line " + std::to_string(line_no) + ": bad label '" + std::string(fields[2]) + "'");
    }
    record.label = label;
    record.image_path = parse_path(fields[3]);
    record.text_path = parse_path(fields[4]);
    manifest.records.push_back(std::move(record));
  }
  if (!have_labels) throw ParseError("manifest is missing the #labels header");
  validate_manifest(manifest);
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(util::read_file(path), path.parent_path());
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out(kLabelsHeader);
  out += ' ';
  for (std::size_t i = 0; i < manifest.label_set.size(); ++i) {
    if (i) out += ',';
    out += manifest.label_set.name(i);
  }
  out += '\n';
  for (const auto& r : manifest.records) {
    out += r.id;
    out += '\t';
    out += to_string(r.split);
    out += '\t';
    out += std::to_string(r.label);
    out += '\t';
    out += path_field(r.image_path);
    out += '\t';
    out += path_field(r.text_path);
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  util::write_file(path, format_manifest(manifest));
}

DatasetManifest filter_split(const DatasetManifest& manifest, Split split) {
  DatasetManifest out;
  out.label_set = manifest.label_set;
  out.root = manifest.root;
  for (const auto& r : manifest.records) {
    if (r.split == split) out.records.push_back(r);
  }
  return out;
}

}  // namespace mmdoc
