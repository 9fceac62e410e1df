#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmdoc/core/types.hpp"

namespace mmdoc {

/// The dataset: label space plus page records with explicit split membership.
///
/// Relative record paths are interpreted against `root`, which load_manifest
/// sets to the manifest file's directory.
struct DatasetManifest {
  LabelSet label_set;
  std::vector<PageRecord> records;
  std::filesystem::path root;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const PageRecord& find(const std::string& id) const;
};

/// Checks id uniqueness, label range and modality presence.
void validate_manifest(const DatasetManifest& manifest);

/// Reads the tab-separated manifest format:
///
///   #labels: name0,name1,...
///   id<TAB>split<TAB>label<TAB>image_path<TAB>text_path
///
/// `-` marks an absent path. Other lines starting with `#` and blank lines
/// are ignored.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& content, std::filesystem::path root = {});

/// Serializes in the same format. Paths are written as stored.
std::string format_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

DatasetManifest filter_split(const DatasetManifest& manifest, Split split);

}  // namespace mmdoc
