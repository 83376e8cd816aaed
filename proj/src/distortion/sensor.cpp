#include <algorithm>
#include <cmath>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/rng.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

ImageBuffer sensor_blooming(const ImageBuffer& img, double threshold, double spread) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("sensor_blooming threshold must be in (0,1]");
  }
  detail::require_nonnegative(spread, "sensor_blooming spread");
  if (spread == 0.0) return img;
  constexpr double kLeakGain = 2.0;
  ImageBuffer excess = img;
  bool any = false;
  for (float& s : excess.samples()) {
    s = static_cast<float>(std::max(0.0, static_cast<double>(s) - threshold));
    any = any || s > 0.0f;
  }
  if (!any) return img;
  const auto k = detail::gaussian_kernel(spread);
  const ImageBuffer spread_excess = detail::convolve_separable(excess, k, k);
  ImageBuffer out = img;
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Only charge that moved away from its source pixel is added back.
    const double leak = std::max(0.0, static_cast<double>(spread_excess.samples()[i]) - excess.samples()[i]);
    out.samples()[i] = static_cast<float>(out.samples()[i] + kLeakGain * leak);
  }
  return clamp(std::move(out));
}

ImageBuffer vignette(const ImageBuffer& img, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) throw InvalidArgument("vignette strength must be in [0,1]");
  if (strength == 0.0) return img;
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  const double norm = std::max(cx * cx + cy * cy, 1e-12);
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / norm;
      const double factor = 1.0 - strength * r2;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<float>(img.at(x, y, c) * factor);
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer hot_pixels(const ImageBuffer& img, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("hot_pixels fraction must be in [0,1]");
  if (fraction == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double u = rng.uniform();
      const auto channel = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.channels())));
      if (u < fraction) out.at(x, y, channel) = 1.0f;
    }
  }
  return out;
}

}  // namespace featdistill::ops
