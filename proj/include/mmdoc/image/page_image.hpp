#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmdoc::image {

/// 8-bit raster, row-major, channels interleaved (1 = gray, 3 = RGB).
struct PageImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  PageImage() = default;
  PageImage(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t ch = 0) { return pixels[(y * width + x) * channels + ch]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch = 0) const {
    return pixels[(y * width + x) * channels + ch];
  }

  /// Throws DecodeError on zero dimensions, bad channel count or size mismatch.
  void validate() const;

  bool operator==(const PageImage&) const = default;
};

enum class ImageFormat { Pgm, PgmAscii, Png };

/// Decodes by content sniffing: binary/ASCII PNM (P2, P3, P5, P6, maxval
/// <= 255) always; PNG when built with the libpng adapter.
PageImage decode_image(std::span<const std::uint8_t> bytes);
PageImage load_image(const std::filesystem::path& path);

/// PNM output is P5/P6 (or P2/P3 for PgmAscii) depending on channel count.
std::vector<std::uint8_t> encode_image(const PageImage& image, ImageFormat format);
void save_image(const PageImage& image, const std::filesystem::path& path, ImageFormat format = ImageFormat::Pgm);

bool png_supported();

}  // namespace mmdoc::image
