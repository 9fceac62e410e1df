#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mmdoc/core/manifest.hpp"
#include "mmdoc/image/page_image.hpp"

namespace mmdoc::audit {

enum class Method { Text, ImageHash };
std::string_view to_string(Method method);
/// Accepts "text" and "image" (or "image-hash").
Method parse_method(std::string_view text);

struct Member {
  std::string id;
  Split split = Split::Train;
  ClassIndex label = 0;

  bool operator==(const Member&) const = default;
};

struct DuplicateGroup {
  std::string key;  // hex SHA-256
  std::vector<Member> members;  // sorted by id

  std::size_t size() const { return members.size(); }
  bool spans_splits() const;
};

struct RecordIssue {
  std::string id;
  std::string detail;
};

struct AuditReport {
  Method method = Method::Text;
  std::vector<DuplicateGroup> groups;  // descending size, then key
  std::vector<Member> empty_text;      // flagged, never grouped
  std::vector<RecordIssue> issues;     // unreadable or undecodable records
  std::map<ClassIndex, std::size_t> per_class_counts;
  std::map<Split, std::size_t> per_split_counts;
  std::size_t total_duplicate_instances = 0;
};

/// Lowercase (ASCII), whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view text);
std::string text_digest(std::string_view text);
/// Hash of "width height channels\n" followed by the raw pixels.
std::string image_digest(const image::PageImage& image);

/// Groups of size >= 2 keyed by digest; counts derived from the groups.
AuditReport build_report(Method method, std::map<std::string, std::vector<Member>> by_key);

AuditReport find_text_duplicates(const DatasetManifest& manifest);
AuditReport find_image_duplicates(const DatasetManifest& manifest);

std::vector<DuplicateGroup> cross_split_contamination(const AuditReport& report);

/// Class/count table ordered by descending count (ties: higher class index
/// first) with a total row, followed by the split breakdown.
std::string format_audit_table(const AuditReport& report);
/// One row per duplicate instance: id, split, label, group key, method.
std::string format_audit_tsv(const AuditReport& report, const LabelSet& labels);

}  // namespace mmdoc::audit
