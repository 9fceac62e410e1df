#include "mmdoc/image/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmdoc/core/error.hpp"

namespace mmdoc::image {

namespace {

// Samples of the resized image as doubles, interleaved like PageImage.
std::vector<double> resize_samples(const PageImage& img, std::size_t width, std::size_t height) {
  img.validate();
  if (width == 0 || height == 0) throw ValidationError("resize target has a zero dimension");
  const std::size_t c = img.channels;
  std::vector<double> out(width * height * c);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);

  struct Tap {
    std::size_t i0, i1;
    double w1;
  };
  auto taps = [](std::size_t n_out, std::size_t n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const auto i0 = static_cast<std::size_t>(src);
      t[o] = {i0, std::min(i0 + 1, n_in - 1), src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto xt = taps(width, img.width, sx);
  const auto yt = taps(height, img.height, sy);

  for (std::size_t y = 0; y < height; ++y) {
    const auto& ty = yt[y];
    for (std::size_t x = 0; x < width; ++x) {
      const auto& tx = xt[x];
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = img.at(tx.i0, ty.i0, ch) * (1 - tx.w1) + img.at(tx.i1, ty.i0, ch) * tx.w1;
        const double bot = img.at(tx.i0, ty.i1, ch) * (1 - tx.w1) + img.at(tx.i1, ty.i1, ch) * tx.w1;
        out[(y * width + x) * c + ch] = top * (1 - ty.w1) + bot * ty.w1;
      }
    }
  }
  return out;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

PageImage resize_bilinear(const PageImage& image, std::size_t width, std::size_t height) {
  const auto samples = resize_samples(image, width, height);
  PageImage out(width, height, image.channels);
  std::transform(samples.begin(), samples.end(), out.pixels.begin(), to_byte);
  return out;
}

nn::Tensor preprocess(const PageImage& image, std::size_t side) {
  const auto samples = resize_samples(image, side, side);
  const std::size_t c = image.channels;
  nn::Tensor t({3, side, side});
  const std::size_t plane = side * side;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      t.data[ch * plane + i] = samples[i * c + (c == 1 ? 0 : ch)] / 127.5 - 1.0;
    }
  }
  return t;
}

nn::Tensor load_and_preprocess(const std::filesystem::path& path, std::size_t side) {
  return preprocess(load_image(path), side);
}

void AugmentationPolicy::validate() const {
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  if (bad(shear_range_deg)) throw ValidationError("shear range must be a finite non-negative half-width");
  if (bad(rotation_range_deg)) throw ValidationError("rotation range must be a finite non-negative half-width");
  if (!(salt_pepper_fraction >= 0.0 && salt_pepper_fraction <= 1.0)) {
    throw ValidationError("salt-and-pepper fraction must be in [0, 1]");
  }
}

nlohmann::json to_json(const AugmentationPolicy& p) {
  return {{"shear_range_deg", p.shear_range_deg},
          {"rotation_range_deg", p.rotation_range_deg},
          {"salt_pepper_fraction", p.salt_pepper_fraction},
          {"seed", p.seed}};
}

AugmentationPolicy augmentation_from_json(const nlohmann::json& j) {
  AugmentationPolicy p;
  p.shear_range_deg = j.value("shear_range_deg", p.shear_range_deg);
  p.rotation_range_deg = j.value("rotation_range_deg", p.rotation_range_deg);
  p.salt_pepper_fraction = j.value("salt_pepper_fraction", p.salt_pepper_fraction);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

AffineAngles sample_angles(const AugmentationPolicy& policy, nn::Rng& rng) {
  AffineAngles a;
  a.shear_deg = rng.uniform(-policy.shear_range_deg, policy.shear_range_deg);
  a.rotation_deg = rng.uniform(-policy.rotation_range_deg, policy.rotation_range_deg);
  return a;
}

PageImage apply_affine(const PageImage& image, const AffineAngles& angles) {
  image.validate();
  if (angles.shear_deg == 0.0 && angles.rotation_deg == 0.0) return image;

  const double t = std::tan(angles.shear_deg * kDegToRad);
  const double cr = std::cos(angles.rotation_deg * kDegToRad), sr = std::sin(angles.rotation_deg * kDegToRad);
  // M = [1 t; 0 1] * [cr -sr; sr cr]
  const double m00 = cr + t * sr, m01 = -sr + t * cr, m10 = sr, m11 = cr;
  const double det = m00 * m11 - m01 * m10;
  const double i00 = m11 / det, i01 = -m01 / det, i10 = -m10 / det, i11 = m00 / det;

  const double cx = (static_cast<double>(image.width) - 1) / 2, cy = (static_cast<double>(image.height) - 1) / 2;
  const auto w = static_cast<long>(image.width), h = static_cast<long>(image.height);
  const std::size_t c = image.channels;
  PageImage out(image.width, image.height, c);

  auto sample = [&](long x, long y, std::size_t ch) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 255.0;
    return image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), ch);
  };

  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = i00 * dx + i01 * dy + cx, sy = i10 * dx + i11 * dy + cy;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const auto x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = sample(x0, y0, ch) * (1 - ax) + sample(x0 + 1, y0, ch) * ax;
        const double bot = sample(x0, y0 + 1, ch) * (1 - ax) + sample(x0 + 1, y0 + 1, ch) * ax;
        out.at(x, y, ch) = to_byte(top * (1 - ay) + bot * ay);
      }
    }
  }
  return out;
}

void salt_and_pepper(PageImage& image, double fraction, nn::Rng& rng) {
  if (fraction <= 0.0) return;
  const std::size_t pixels = image.width * image.height;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double u = rng.uniform();
    if (u >= fraction) continue;
    const std::uint8_t v = u < fraction / 2 ? 0 : 255;
    for (std::size_t ch = 0; ch < image.channels; ++ch) image.pixels[i * image.channels + ch] = v;
  }
}

PageImage augment(const PageImage& image, const AugmentationPolicy& policy, nn::Rng& rng) {
  policy.validate();
  PageImage out = apply_affine(image, sample_angles(policy, rng));
  salt_and_pepper(out, policy.salt_pepper_fraction, rng);
  return out;
}

}  // namespace mmdoc::image
