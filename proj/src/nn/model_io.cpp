#include "mmdoc/nn/model_io.hpp"

#include <bit>
#include <cstring>

#include "mmdoc/core/error.hpp"
#include "mmdoc/util/io.hpp"

namespace mmdoc::nn {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'D', 'O', 'C', 'N', 'N', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64s(std::string& out, const std::vector<double>& values) {
  put_u64(out, values.size());
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("model file truncated");
  }

  std::uint64_t u(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string blob() {
    const std::uint64_t n = u(8);
    need(n);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::vector<double> f64s(std::size_t expected, const char* what) {
    const std::uint64_t n = u(8);
    if (n != expected) {
      throw ValidationError(std::string("model declares ") + std::to_string(n) + " " + what + " but its network needs " +
                            std::to_string(expected));
    }
    need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = std::bit_cast<double>(u(8));
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ModelArtifact ModelArtifact::capture(const Network& network) {
  ModelArtifact a;
  a.spec = network.spec();
  a.parameters.assign(network.parameters().begin(), network.parameters().end());
  a.buffers.assign(network.buffers().begin(), network.buffers().end());
  return a;
}

Network ModelArtifact::instantiate() const {
  Network net(spec);
  if (parameters.size() != net.parameter_count() || buffers.size() != net.buffers().size()) {
    throw ValidationError("artifact weights do not match its network spec");
  }
  std::copy(parameters.begin(), parameters.end(), net.parameters().begin());
  std::copy(buffers.begin(), buffers.end(), net.buffers().begin());
  return net;
}

std::string serialize_model(const ModelArtifact& artifact) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kModelFormatVersion);
  const nlohmann::json header = {{"network", to_json(artifact.spec)}, {"metadata", artifact.metadata}};
  const std::string header_text = header.dump();
  put_u64(out, header_text.size());
  out += header_text;
  std::string vocab;
  for (const auto& w : artifact.vocabulary) {
    vocab += w;
    vocab += '\n';
  }
  put_u64(out, vocab.size());
  out += vocab;
  put_f64s(out, artifact.parameters);
  put_f64s(out, artifact.buffers);
  return out;
}

ModelArtifact deserialize_model(const std::string& bytes) {
  Reader in(bytes);
  in.need(sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("not a model file (bad magic)");
  in.u(8);
  const auto version = static_cast<std::uint32_t>(in.u(4));
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  ModelArtifact a;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.blob());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt model header: ") + e.what());
  }
  if (!header.contains("network")) throw FormatError("model header lacks a network spec");
  a.spec = network_spec_from_json(header["network"]);
  a.metadata = header.value("metadata", nlohmann::json::object());
  const std::string vocab = in.blob();
  if (!vocab.empty()) {
    if (vocab.back() != '\n') throw FormatError("vocabulary section not newline-terminated");
    for (auto w : util::split(std::string_view(vocab).substr(0, vocab.size() - 1), '\n')) a.vocabulary.emplace_back(w);
  }
  try {
    infer_shapes(a.spec);
  } catch (const ShapeError& e) {
    throw ValidationError(std::string("model network spec invalid: ") + e.what());
  }
  a.parameters = in.f64s(parameter_count(a.spec), "parameters");
  a.buffers = in.f64s(buffer_count(a.spec), "buffers");
  if (!in.done()) throw FormatError("trailing bytes after model payload");
  return a;
}

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
  util::write_file(path, serialize_model(artifact));
}

ModelArtifact load_model(const std::filesystem::path& path) { return deserialize_model(util::read_file(path)); }

}  // namespace mmdoc::nn
