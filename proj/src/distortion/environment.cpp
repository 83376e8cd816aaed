#include <algorithm>
#include <cmath>
#include <numbers>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/rng.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

namespace {

constexpr double kAirlight = 0.9;

// Diamond-square plasma on a (2^k+1)^2 grid covering the image, normalized
// to [0,1].
std::vector<double> plasma(int width, int height, SeededRng& rng) {
  int n = 1;
  while (n + 1 < std::max(width, height)) n *= 2;
  const int size = n + 1;
  std::vector<double> g(static_cast<std::size_t>(size) * size, 0.0);
  auto at = [&](int x, int y) -> double& { return g[static_cast<std::size_t>(y) * size + x]; };
  at(0, 0) = rng.uniform();
  at(n, 0) = rng.uniform();
  at(0, n) = rng.uniform();
  at(n, n) = rng.uniform();
  double amp = 0.5;
  for (int step = n; step > 1; step /= 2, amp *= 0.55) {
    const int half = step / 2;
    for (int y = half; y < size; y += step) {
      for (int x = half; x < size; x += step) {
        const double avg = (at(x - half, y - half) + at(x + half, y - half) +
                            at(x - half, y + half) + at(x + half, y + half)) / 4.0;
        at(x, y) = avg + rng.uniform(-amp, amp);
      }
    }
    for (int y = 0; y < size; y += half) {
      for (int x = (y / half) % 2 == 0 ? half : 0; x < size; x += step) {
        double sum = 0.0;
        int count = 0;
        if (x >= half) { sum += at(x - half, y); ++count; }
        if (x + half < size) { sum += at(x + half, y); ++count; }
        if (y >= half) { sum += at(x, y - half); ++count; }
        if (y + half < size) { sum += at(x, y + half); ++count; }
        at(x, y) = sum / count + rng.uniform(-amp, amp);
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  const double lo_v = *lo;
  const double range = *hi - *lo;
  std::vector<double> field(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      field[static_cast<std::size_t>(y) * width + x] = range > 0 ? (at(x, y) - lo_v) / range : 0.5;
    }
  }
  return field;
}

}  // namespace

ImageBuffer fog(const ImageBuffer& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) throw InvalidArgument("fog density must be in [0,1]");
  if (density == 0.0) return img;
  SeededRng rng(seed);
  const std::vector<double> field = plasma(img.width(), img.height(), rng);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // Depth kept in [0.1, 1] so every pixel receives some haze.
      const double depth = 0.1 + 0.9 * field[static_cast<std::size_t>(y) * img.width() + x];
      const double t = std::exp(-density * depth);
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<float>((1.0 - t) * kAirlight + t * img.at(x, y, c));
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer rain(const ImageBuffer& img, double density, int length, std::uint64_t seed) {
  detail::require_nonnegative(density, "rain density");
  if (length < 1) throw InvalidArgument("rain length must be >= 1");
  const auto count = static_cast<long>(std::lround(density * static_cast<double>(img.pixel_count())));
  if (count == 0) return img;
  SeededRng rng(seed);
  const double slant = rng.uniform(-20.0, 20.0) * std::numbers::pi / 180.0;
  const double dx = std::sin(slant);
  const double dy = std::cos(slant);
  ImageBuffer out = img;
  for (long i = 0; i < count; ++i) {
    const double x0 = rng.uniform(0.0, img.width());
    const double y0 = rng.uniform(-length, img.height());
    const double alpha = rng.uniform(0.25, 0.5);
    for (int t = 0; t < length; ++t) {
      detail::blend_pixel(out, static_cast<int>(std::floor(x0 + t * dx)),
                          static_cast<int>(std::floor(y0 + t * dy)), 0.85, alpha);
    }
  }
  return clamp(std::move(out));
}

ImageBuffer snow(const ImageBuffer& img, double density, std::uint64_t seed) {
  detail::require_nonnegative(density, "snow density");
  const auto count = static_cast<long>(std::lround(density * static_cast<double>(img.pixel_count())));
  if (count == 0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (long i = 0; i < count; ++i) {
    const double cx = rng.uniform(0.0, img.width());
    const double cy = rng.uniform(0.0, img.height());
    const double r = rng.uniform(0.6, 2.2);
    const double alpha = rng.uniform(0.6, 0.95);
    const int reach = static_cast<int>(std::ceil(r + 1.0));
    for (int y = static_cast<int>(cy) - reach; y <= static_cast<int>(cy) + reach; ++y) {
      for (int x = static_cast<int>(cx) - reach; x <= static_cast<int>(cx) + reach; ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
        if (cover > 0.0) detail::blend_pixel(out, x, y, 0.95, alpha * cover);
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer shadow_mask(const ImageBuffer& img, double strength, std::uint64_t seed) {
  if (!(strength >= 0.0 && strength <= 1.0)) throw InvalidArgument("shadow_mask strength must be in [0,1]");
  if (strength == 0.0) return img;
  SeededRng rng(seed);
  const double px = rng.uniform(0.0, img.width());
  const double py = rng.uniform(0.0, img.height());
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double nx = std::cos(angle);
  const double ny = std::sin(angle);
  const double softness = 0.03 * std::min(img.width(), img.height()) + 1.0;
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double s = ((x - px) * nx + (y - py) * ny) / softness;
      const double factor = 1.0 - strength / (1.0 + std::exp(-s));
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<float>(img.at(x, y, c) * factor);
      }
    }
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
