#include <cctype>
#include <cstring>
#include <string>

#include "mmdoc/core/error.hpp"
#include "mmdoc/image/page_image.hpp"
#include "mmdoc/util/io.hpp"

#ifdef MMDOC_HAVE_PNG
#include <png.h>
#endif

namespace mmdoc::image {

void PageImage::validate() const {
  if (width == 0 || height == 0) throw DecodeError("image has a zero dimension");
  if (channels != 1 && channels != 3) throw DecodeError("image must have 1 or 3 channels");
  if (pixels.size() != width * height * channels) throw DecodeError("pixel buffer size does not match dimensions");
}

namespace {

class PnmParser {
 public:
  explicit PnmParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  PageImage parse() {
    if (bytes_.size() < 2 || bytes_[0] != 'P') throw DecodeError("not a PNM image");
    const char kind = static_cast<char>(bytes_[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
      throw DecodeError(std::string("unsupported PNM variant P") + kind);
    }
    pos_ = 2;
    const std::size_t w = header_number(), h = header_number(), maxval = header_number();
    if (maxval == 0 || maxval > 255) throw DecodeError("PNM maxval must be in [1, 255]");
    const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;
    PageImage img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    if (w == 0 || h == 0) throw DecodeError("image has a zero dimension");
    const std::size_t n = w * h * channels;
    img.pixels.resize(n);
    if (kind == '5' || kind == '6') {
      if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw DecodeError("malformed PNM header");
      ++pos_;
      if (bytes_.size() - pos_ < n) throw DecodeError("PNM pixel data truncated");
      std::memcpy(img.pixels.data(), bytes_.data() + pos_, n);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t v = header_number();
        if (v > maxval) throw DecodeError("PNM sample exceeds maxval");
        img.pixels[i] = static_cast<std::uint8_t>(v);
      }
    }
    if (maxval != 255) {
      for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
    return img;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t header_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw DecodeError("malformed PNM header");
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1u << 24)) throw DecodeError("PNM dimension too large");
      ++pos_;
    }
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_pnm(const PageImage& img, bool ascii) {
  const char kind = ascii ? (img.channels == 1 ? '2' : '3') : (img.channels == 1 ? '5' : '6');
  std::string header = std::string("P") + kind + "\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                       "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  if (!ascii) {
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
  }
  std::size_t col = 0;
  for (auto p : img.pixels) {
    const std::string s = std::to_string(p);
    out.insert(out.end(), s.begin(), s.end());
    out.push_back(++col % 16 == 0 ? '\n' : ' ');
  }
  out.push_back('\n');
  return out;
}

#ifdef MMDOC_HAVE_PNG
PageImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw DecodeError(std::string("PNG decode failed: ") + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PageImage img;
  img.width = png.width;
  img.height = png.height;
  img.channels = color ? 3 : 1;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DecodeError(std::string("PNG decode failed: ") + png.message);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const PageImage& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(png, size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}
#endif

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

}  // namespace

bool png_supported() {
#ifdef MMDOC_HAVE_PNG
  return true;
#else
  return false;
#endif
}

PageImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
#ifdef MMDOC_HAVE_PNG
    auto img = decode_png(bytes);
    img.validate();
    return img;
#else
    throw DecodeError("PNG support not built in");
#endif
  }
  auto img = PnmParser(bytes).parse();
  img.validate();
  return img;
}

PageImage load_image(const std::filesystem::path& path) {
  const std::string bytes = util::read_file(path);
  try {
    return decode_image({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_image(const PageImage& image, ImageFormat format) {
  image.validate();
  switch (format) {
    case ImageFormat::Pgm:
      return encode_pnm(image, false);
    case ImageFormat::PgmAscii:
      return encode_pnm(image, true);
    case ImageFormat::Png:
#ifdef MMDOC_HAVE_PNG
      return encode_png(image);
#else
      throw Error("PNG support not built in");
#endif
  }
  return {};
}

void save_image(const PageImage& image, const std::filesystem::path& path, ImageFormat format) {
  util::write_file(path, encode_image(image, format));
}

}  // namespace mmdoc::image
