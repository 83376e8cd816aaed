#include <cmath>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/rng.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

ImageBuffer gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
  detail::require_nonnegative(sigma, "gaussian_noise sigma");
  if (sigma == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (float& s : out.samples()) s = static_cast<float>(s + sigma * rng.normal());
  return clamp(std::move(out));
}

ImageBuffer poisson_noise(const ImageBuffer& img, double scale, std::uint64_t seed) {
  detail::require_nonnegative(scale, "poisson_noise scale");
  if (scale == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (float& s : out.samples()) {
    s = static_cast<float>(static_cast<double>(rng.poisson(s / scale)) * scale);
  }
  return clamp(std::move(out));
}

ImageBuffer iso_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
  detail::require_nonnegative(sigma, "iso_noise sigma");
  if (sigma == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  // Signal-dependent luma grain shared across channels plus weaker chroma grain.
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double luma = rng.normal();
      for (int c = 0; c < img.channels(); ++c) {
        const double v = img.at(x, y, c);
        const double n = 0.8 * luma + 0.6 * rng.normal();
        out.at(x, y, c) = static_cast<float>(v + sigma * std::sqrt(v + 0.02) * n);
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer salt_pepper(const ImageBuffer& img, double amount, std::uint64_t seed) {
  detail::require_nonnegative(amount, "salt_pepper amount");
  if (amount == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // Two draws per pixel regardless of outcome, so larger amounts corrupt
      // a superset of the pixels hit by smaller ones under the same seed.
      const double u = rng.uniform();
      const float value = rng.uniform() < 0.5 ? 0.0f : 1.0f;
      if (u < amount) {
        for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = value;
      }
    }
  }
  return out;
}

ImageBuffer banding_noise(const ImageBuffer& img, double amplitude, std::uint64_t seed) {
  detail::require_nonnegative(amplitude, "banding_noise amplitude");
  if (amplitude == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    const double offset = amplitude * rng.normal();
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<float>(img.at(x, y, c) + offset);
      }
    }
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
