#include "mmdoc/ingest/ocr.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <system_error>

#include "mmdoc/image/transform.hpp"
#include "mmdoc/util/io.hpp"

extern char** environ;

namespace mmdoc::ingest {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kInput = "{input}";
constexpr std::string_view kOutput = "{output}";
constexpr std::string_view kArgs = "{args}";

std::size_t count_of(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

std::string substitute(const OcrConfig& config, const fs::path& input, const fs::path& output) {
  std::string out;
  std::string_view t = config.command_template;
  for (std::size_t i = 0; i < t.size();) {
    auto rest = t.substr(i);
    if (rest.starts_with(kInput)) {
      out += shell_quote(input.string());
      i += kInput.size();
    } else if (rest.starts_with(kOutput)) {
      out += shell_quote(output.string());
      i += kOutput.size();
    } else if (rest.starts_with(kArgs)) {
      out += config.engine_args;
      i += kArgs.size();
    } else {
      out += t[i++];
    }
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "mmdoc_ocr_XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw IoError("cannot create temporary directory: " + std::string(std::strerror(errno)));
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Runs `sh -c command` with stdin from /dev/null and stdout+stderr into `log`.
// Returns the exit status, or -1 when terminated by a signal.
int run_shell(const std::string& command, const fs::path& log) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  posix_spawn_file_actions_adddup2(&actions, 1, 2);
  const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw ExtractionError("cannot start /bin/sh: " + std::string(std::strerror(rc)), -1);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw ExtractionError("waitpid failed: " + std::string(std::strerror(errno)), -1);
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string diagnostics(const fs::path& log) {
  std::error_code ec;
  if (!fs::exists(log, ec)) return {};
  std::string text = sanitize_utf8(util::read_file(log));
  std::string t(util::trim(text));
  if (t.size() > 400) t = t.substr(0, 400) + "...";
  return t;
}

bool safe_file_stem(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find_first_of("/\\") == std::string::npos &&
         id.find('\0') == std::string::npos;
}

fs::path absolute_path(const DatasetManifest& m, const fs::path& p) { return fs::absolute(m.resolve(p)).lexically_normal(); }

}  // namespace

void OcrConfig::validate() const {
  if (count_of(command_template, kInput) != 1 || count_of(command_template, kOutput) != 1) {
    throw ValidationError("OCR command template must contain {input} and {output} exactly once");
  }
  if (longest_side_px == 0) throw ValidationError("OCR longest side must be positive");
}

nlohmann::json to_json(const OcrConfig& c) {
  return {{"command_template", c.command_template},
          {"longest_side_px", c.longest_side_px},
          {"engine_args", c.engine_args}};
}

OcrConfig ocr_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("ocr options must be an object");
  OcrConfig c;
  try {
    if (j.contains("command_template")) c.command_template = j.at("command_template").get<std::string>();
    if (j.contains("longest_side_px")) c.longest_side_px = j.at("longest_side_px").get<std::size_t>();
    if (j.contains("engine_args")) c.engine_args = j.at("engine_args").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad ocr options: ") + e.what());
  }
  c.validate();
  return c;
}

image::PageImage resize_for_ocr(const image::PageImage& img, std::size_t longest) {
  if (img.width == 0 || img.height == 0) throw ValidationError("cannot resize an empty image");
  if (longest == 0) throw ValidationError("OCR longest side must be positive");
  const bool wide = img.width >= img.height;
  const double ratio = wide ? static_cast<double>(img.height) / static_cast<double>(img.width)
                            : static_cast<double>(img.width) / static_cast<double>(img.height);
  const auto other = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(longest))));
  return wide ? image::resize_bilinear(img, longest, other) : image::resize_bilinear(img, other, longest);
}

std::string sanitize_utf8(std::string_view s, bool* replaced) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(s.size());
  bool any = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    unsigned char lo = 0x80, hi = 0xBF;
    if (b0 < 0x80) len = 1;
    else if (b0 >= 0xC2 && b0 <= 0xDF) len = 2;
    else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      if (b0 == 0xE0) lo = 0xA0;
      if (b0 == 0xED) hi = 0x9F;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      if (b0 == 0xF0) lo = 0x90;
      if (b0 == 0xF4) hi = 0x8F;
    }
    // Maximal-subpart replacement: one U+FFFD per invalid prefix.
    std::size_t ok = len == 0 ? 0 : 1;
    for (std::size_t k = 1; k < len && i + k < s.size(); ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      const unsigned char l = k == 1 ? lo : 0x80, h = k == 1 ? hi : 0xBF;
      if (b < l || b > h) break;
      ++ok;
    }
    if (len != 0 && ok == len) {
      out.append(s.substr(i, len));
      i += len;
    } else {
      out += kReplacement;
      any = true;
      i += std::max<std::size_t>(1, ok);
    }
  }
  if (replaced) *replaced = any;
  return out;
}

ExtractedText extract_text(const image::PageImage& page, const OcrConfig& config) {
  config.validate();
  page.validate();
  const auto resized = resize_for_ocr(page, config.longest_side_px);
  TempDir dir;
  const auto input = dir.path() / (resized.channels == 1 ? "page.pgm" : "page.ppm");
  const auto output = dir.path() / "page.txt";
  const auto log = dir.path() / "ocr.log";
  image::save_image(resized, input, image::ImageFormat::Pgm);
  const int status = run_shell(substitute(config, input, output), log);
  if (status != 0) {
    std::string msg = status == 127 ? "OCR command not found"
                      : status < 0  ? "OCR command terminated abnormally"
                                    : "OCR command exited with status " + std::to_string(status);
    const auto diag = diagnostics(log);
    if (!diag.empty()) msg += ": " + diag;
    throw ExtractionError(msg, status);
  }
  std::error_code ec;
  if (!fs::is_regular_file(output, ec)) {
    std::string msg = "OCR command produced no output file";
    const auto diag = diagnostics(log);
    if (!diag.empty()) msg += ": " + diag;
    throw ExtractionError(msg, 0);
  }
  ExtractedText out;
  out.text = sanitize_utf8(util::read_file(output), &out.invalid_utf8);
  return out;
}

ExtractedText extract_text(const DatasetManifest& manifest, const PageRecord& record, const OcrConfig& config) {
  if (!record.image_path) throw ValidationError("record '" + record.id + "' has no image");
  return extract_text(image::load_image(manifest.resolve(*record.image_path)), config);
}

std::string_view to_string(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::Extracted: return "extracted";
    case ExtractionStatus::Skipped: return "skipped";
    case ExtractionStatus::Failed: return "failed";
  }
  return "?";
}

ExtractionSummary extract_corpus(const DatasetManifest& manifest, const OcrConfig& config, const fs::path& output_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) throw IoError("cannot create output directory " + output_dir.string());
  const auto out_dir = fs::absolute(output_dir).lexically_normal();

  ExtractionSummary summary;
  summary.manifest.label_set = manifest.label_set;
  summary.manifest.root = out_dir;
  for (const auto& src : manifest.records) {
    PageRecord r = src;
    if (r.image_path) r.image_path = absolute_path(manifest, *r.image_path);
    if (r.text_path) r.text_path = absolute_path(manifest, *r.text_path);

    ExtractionEntry entry{r.id, ExtractionStatus::Skipped, {}};
    const auto target = out_dir / (r.id + ".txt");
    if (r.text_path) {
      entry.detail = "text already present";
    } else if (!r.image_path) {
      entry.detail = "no image";
    } else if (!safe_file_stem(r.id)) {
      entry.status = ExtractionStatus::Failed;
      entry.detail = "record id is not usable as a file name";
    } else if (fs::exists(target, ec)) {
      entry.detail = "existing output";
      r.text_path = target;
    } else {
      try {
        const auto text = extract_text(manifest, src, config);
        // Write then rename so an interrupted run never leaves a partial file
        // that a rerun would mistake for finished output.
        const auto tmp = out_dir / (r.id + ".txt.part");
        util::write_file(tmp, text.text);
        fs::rename(tmp, target);
        r.text_path = target;
        entry.status = ExtractionStatus::Extracted;
        if (text.invalid_utf8) entry.detail = "invalid UTF-8 replaced";
      } catch (const Error& e) {
        entry.status = ExtractionStatus::Failed;
        entry.detail = e.what();
      } catch (const fs::filesystem_error& e) {
        entry.status = ExtractionStatus::Failed;
        entry.detail = e.what();
      }
    }
    switch (entry.status) {
      case ExtractionStatus::Extracted: ++summary.extracted; break;
      case ExtractionStatus::Skipped: ++summary.skipped; break;
      case ExtractionStatus::Failed: ++summary.failed; break;
    }
    summary.entries.push_back(std::move(entry));
    summary.manifest.records.push_back(std::move(r));
  }
  return summary;
}

std::string format_extraction_summary(const ExtractionSummary& s) {
  auto clean = [](std::string v) {
    std::replace_if(v.begin(), v.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    return v;
  };
  std::string out = "id\tstatus\tdetail\n";
  for (const auto& e : s.entries) {
    out += clean(e.id) + "\t" + std::string(to_string(e.status)) + "\t" + clean(e.detail.empty() ? "-" : e.detail) + "\n";
  }
  return out;
}

}  // namespace mmdoc::ingest
