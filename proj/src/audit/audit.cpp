#include "mmdoc/audit/audit.hpp"

#include <algorithm>
#include <set>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::audit {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

Member member_of(const PageRecord& r) { return {r.id, r.split, r.label}; }

std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }
std::string rpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

void sort_issues(std::vector<RecordIssue>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::Text ? "text" : "image-hash"; }

Method parse_method(std::string_view t) {
  if (t == "text") return Method::Text;
  if (t == "image" || t == "image-hash") return Method::ImageHash;
  throw ValidationError("unknown audit method '" + std::string(t) + "'");
}

bool DuplicateGroup::spans_splits() const {
  for (const auto& m : members)
    if (m.split != members.front().split) return true;
  return false;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

std::string text_digest(std::string_view text) { return util::sha256_hex(normalize_text(text)); }

std::string image_digest(const image::PageImage& img) {
  std::string bytes = std::to_string(img.width) + " " + std::to_string(img.height) + " " + std::to_string(img.channels) + "\n";
  bytes.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return util::sha256_hex(bytes);
}

AuditReport build_report(Method method, std::map<std::string, std::vector<Member>> by_key) {
  AuditReport rep;
  rep.method = method;
  for (auto& [key, members] : by_key) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) { return a.id < b.id; });
    for (const auto& m : members) {
      ++rep.per_class_counts[m.label];
      ++rep.per_split_counts[m.split];
    }
    rep.total_duplicate_instances += members.size();
    rep.groups.push_back({key, std::move(members)});
  }
  std::stable_sort(rep.groups.begin(), rep.groups.end(),
                   [](const DuplicateGroup& a, const DuplicateGroup& b) { return a.size() > b.size(); });
  return rep;
}

AuditReport find_text_duplicates(const DatasetManifest& manifest) {
  std::map<std::string, std::vector<Member>> by_key;
  std::vector<Member> empty;
  std::vector<RecordIssue> issues;
  for (const auto& r : manifest.records) {
    if (!r.text_path) {
      issues.push_back({r.id, "no text path"});
      continue;
    }
    try {
      const auto canon = normalize_text(util::read_file(manifest.resolve(*r.text_path)));
      if (canon.empty()) empty.push_back(member_of(r));
      else by_key[util::sha256_hex(canon)].push_back(member_of(r));
    } catch (const Error& e) {
      issues.push_back({r.id, e.what()});
    }
  }
  auto rep = build_report(Method::Text, std::move(by_key));
  std::sort(empty.begin(), empty.end(), [](const Member& a, const Member& b) { return a.id < b.id; });
  rep.empty_text = std::move(empty);
  sort_issues(issues);
  rep.issues = std::move(issues);
  return rep;
}

AuditReport find_image_duplicates(const DatasetManifest& manifest) {
  std::map<std::string, std::vector<Member>> by_key;
  std::vector<RecordIssue> issues;
  for (const auto& r : manifest.records) {
    if (!r.image_path) {
      issues.push_back({r.id, "no image path"});
      continue;
    }
    try {
      by_key[image_digest(image::load_image(manifest.resolve(*r.image_path)))].push_back(member_of(r));
    } catch (const Error& e) {
      issues.push_back({r.id, e.what()});
    }
  }
  auto rep = build_report(Method::ImageHash, std::move(by_key));
  sort_issues(issues);
  rep.issues = std::move(issues);
  return rep;
}

std::vector<DuplicateGroup> cross_split_contamination(const AuditReport& report) {
  std::vector<DuplicateGroup> out;
  for (const auto& g : report.groups)
    if (g.spans_splits()) out.push_back(g);
  return out;
}

std::string format_audit_table(const AuditReport& rep) {
  std::vector<std::pair<ClassIndex, std::size_t>> rows(rep.per_class_counts.begin(), rep.per_class_counts.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first > b.first;
  });
  const std::string h1 = "Class", h2 = "Count of Duplicate Image";
  std::size_t w1 = h1.size();
  for (const auto& [k, n] : rows) w1 = std::max(w1, std::to_string(k).size());
  const std::size_t w2 = std::max(h2.size(), std::to_string(rep.total_duplicate_instances).size());

  std::string out = "method: " + std::string(to_string(rep.method)) + "\n";
  out += "duplicate groups: " + std::to_string(rep.groups.size()) + "\n\n";
  out += rpad(h1, w1) + " | " + h2 + "\n";
  out += std::string(w1, '-') + "-+-" + std::string(w2, '-') + "\n";
  for (const auto& [k, n] : rows) out += rpad(std::to_string(k), w1) + " | " + lpad(std::to_string(n), w2) + "\n";
  out += std::string(w1, '-') + "-+-" + std::string(w2, '-') + "\n";
  out += rpad("Total", w1) + " | " + lpad(std::to_string(rep.total_duplicate_instances), w2) + "\n\n";
  for (const auto& [split, n] : rep.per_split_counts) {
    out += rpad(std::string(to_string(split)), 10) + " " + std::to_string(n) + "\n";
  }
  if (!rep.empty_text.empty()) out += "empty text records: " + std::to_string(rep.empty_text.size()) + "\n";
  if (!rep.issues.empty()) out += "unreadable records: " + std::to_string(rep.issues.size()) + "\n";
  return out;
}

std::string format_audit_tsv(const AuditReport& rep, const LabelSet& labels) {
  std::string out = "id\tsplit\tlabel\tgroup_key\tmethod\n";
  const std::string method(to_string(rep.method));
  for (const auto& g : rep.groups) {
    for (const auto& m : g.members) {
      out += m.id + "\t" + std::string(to_string(m.split)) + "\t" + labels.name(m.label) + "\t" + g.key + "\t" + method +
             "\n";
    }
  }
  return out;
}

}  // namespace mmdoc::audit
