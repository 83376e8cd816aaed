#include <algorithm>
#include <cmath>
#include <numbers>

#include "featdistill/distortion_ops.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

using detail::Kernel2D;

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  detail::require_nonnegative(sigma, "gaussian_blur sigma");
  if (sigma == 0.0) return img;
  const auto k = detail::gaussian_kernel(sigma);
  return clamp(detail::convolve_separable(img, k, k));
}

ImageBuffer motion_blur(const ImageBuffer& img, int kernel_len, double angle_deg) {
  if (kernel_len < 1) throw InvalidArgument("motion_blur kernel_len must be >= 1");
  if (kernel_len == 1) return img;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double dx = std::cos(theta);
  const double dy = -std::sin(theta);
  const double half = (kernel_len - 1) / 2.0;
  const int radius = static_cast<int>(std::ceil(half)) + 1;
  Kernel2D kernel{radius, radius, std::vector<double>(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)), 0.0)};
  // L taps along the line, each splatted bilinearly onto the grid.
  for (int i = 0; i < kernel_len; ++i) {
    const double t = -half + i;
    const double px = t * dx;
    const double py = t * dy;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    kernel.at(x0, y0) += (1 - fx) * (1 - fy);
    if (fx > 0) kernel.at(x0 + 1, y0) += fx * (1 - fy);
    if (fy > 0) kernel.at(x0, y0 + 1) += (1 - fx) * fy;
    if (fx > 0 && fy > 0) kernel.at(x0 + 1, y0 + 1) += fx * fy;
  }
  kernel.normalize();
  return clamp(detail::convolve(img, kernel));
}

ImageBuffer defocus_blur(const ImageBuffer& img, double radius) {
  detail::require_nonnegative(radius, "defocus_blur radius");
  if (radius == 0.0) return img;
  const int r = static_cast<int>(std::ceil(radius + 0.5));
  Kernel2D kernel{r, r, std::vector<double>(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)), 0.0)};
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double d = std::sqrt(static_cast<double>(x * x + y * y));
      kernel.at(x, y) = std::clamp(radius + 0.5 - d, 0.0, 1.0);
    }
  }
  kernel.normalize();
  return clamp(detail::convolve(img, kernel));
}

ImageBuffer atmospheric_blur(const ImageBuffer& img, double sigma) {
  detail::require_nonnegative(sigma, "atmospheric_blur sigma");
  if (sigma == 0.0) return img;
  const auto core = detail::gaussian_kernel(sigma);
  const auto tail = detail::gaussian_kernel(3.0 * sigma);
  const ImageBuffer a = detail::convolve_separable(img, core, core);
  const ImageBuffer b = detail::convolve_separable(img, tail, tail);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.samples()[i] = static_cast<float>(0.7 * a.samples()[i] + 0.3 * b.samples()[i]);
  }
  return clamp(std::move(out));
}

ImageBuffer zoom_blur(const ImageBuffer& img, double strength) {
  detail::require_nonnegative(strength, "zoom_blur strength");
  if (strength == 0.0) return img;
  constexpr int kTaps = 8;
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  std::vector<double> acc(img.size(), 0.0);
  for (int t = 0; t < kTaps; ++t) {
    const double scale = 1.0 + strength * t / (kTaps - 1);
    const ImageBuffer layer = detail::warp(img, [&](double x, double y) {
      return std::array<double, 2>{cx + (x - cx) / scale, cy + (y - cy) / scale};
    });
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += layer.samples()[i];
  }
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (std::size_t i = 0; i < acc.size(); ++i) out.samples()[i] = static_cast<float>(acc[i] / kTaps);
  return clamp(std::move(out));
}

ImageBuffer filter(const ImageBuffer& img, int kind, double amount) {
  if (kind != 0 && kind != 1) throw InvalidArgument("filter kind must be 0 (smooth) or 1 (sharpen)");
  detail::require_nonnegative(amount, "filter amount");
  if (amount == 0.0) return img;
  const auto k = detail::gaussian_kernel(1.0);
  const ImageBuffer blurred = detail::convolve_separable(img, k, k);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = img.samples()[i];
    const double b = blurred.samples()[i];
    out.samples()[i] = static_cast<float>(kind == 0 ? v + amount * (b - v) : v + amount * (v - b));
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
