#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "mmdoc/image/page_image.hpp"
#include "mmdoc/nn/rng.hpp"
#include "mmdoc/nn/tensor.hpp"

namespace mmdoc::image {

inline constexpr std::size_t kDefaultSide = 227;

/// Bilinear resize with pixel-center alignment, rounded back to 8 bits.
PageImage resize_bilinear(const PageImage& image, std::size_t width, std::size_t height);

/// Resize to side x side, replicate gray to RGB, map p -> p/127.5 - 1.
/// Result shape [3, side, side].
nn::Tensor preprocess(const PageImage& image, std::size_t side = kDefaultSide);
nn::Tensor load_and_preprocess(const std::filesystem::path& path, std::size_t side = kDefaultSide);

/// Angles are drawn from [-range, +range] degrees.
struct AugmentationPolicy {
  double shear_range_deg = 10.0;
  double rotation_range_deg = 5.0;
  double salt_pepper_fraction = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError for negative or non-finite ranges, or a fraction
  /// outside [0, 1].
  void validate() const;
  bool is_identity() const {
    return shear_range_deg == 0.0 && rotation_range_deg == 0.0 && salt_pepper_fraction == 0.0;
  }

  static AugmentationPolicy none() { return {0.0, 0.0, 0.0, 0}; }
};

nlohmann::json to_json(const AugmentationPolicy& policy);
AugmentationPolicy augmentation_from_json(const nlohmann::json& j);

struct AffineAngles {
  double shear_deg = 0;
  double rotation_deg = 0;
};

/// Draws shear first, then rotation.
AffineAngles sample_angles(const AugmentationPolicy& policy, nn::Rng& rng);

/// Horizontal shear composed with rotation, M = Shear(s) * Rotation(r),
/// about the image center. Bilinear sampling, out-of-bounds reads are 255.
PageImage apply_affine(const PageImage& image, const AffineAngles& angles);

/// Each pixel independently becomes 0 with probability fraction/2 and 255
/// with probability fraction/2 (all channels together).
void salt_and_pepper(PageImage& image, double fraction, nn::Rng& rng);

PageImage augment(const PageImage& image, const AugmentationPolicy& policy, nn::Rng& rng);

}  // namespace mmdoc::image
