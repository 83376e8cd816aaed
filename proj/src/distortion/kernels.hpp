#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "featdistill/errors.hpp"
#include "featdistill/image.hpp"

namespace featdistill::detail {

/// Reflect-101 index folding (..., 2, 1, 0, 1, 2, ...).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Kernel2D {
  int radius_x = 0;
  int radius_y = 0;
  std::vector<double> weights;  // (2*radius_y+1) rows of (2*radius_x+1)

  double& at(int dx, int dy) {
    return weights[static_cast<std::size_t>(dy + radius_y) * (2 * radius_x + 1) +
                   static_cast<std::size_t>(dx + radius_x)];
  }
  double at(int dx, int dy) const {
    return weights[static_cast<std::size_t>(dy + radius_y) * (2 * radius_x + 1) +
                   static_cast<std::size_t>(dx + radius_x)];
  }
  void normalize();
};

std::vector<double> gaussian_kernel(double sigma);

/// Unclamped separable convolution with reflect edges.
ImageBuffer convolve_separable(const ImageBuffer& img, std::span<const double> kx,
                               std::span<const double> ky);

/// Unclamped 2D convolution with reflect edges.
ImageBuffer convolve(const ImageBuffer& img, const Kernel2D& kernel);

/// Resamples every output pixel from the source position returned by
/// map(x, y) -> {sx, sy}, bilinear with edge replication.
template <class Map>
ImageBuffer warp(const ImageBuffer& img, Map&& map) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::array<double, 2> src = map(static_cast<double>(x), static_cast<double>(y));
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = sample_bilinear(img, src[0], src[1], c);
      }
    }
  }
  return out;
}

using Ycc = std::array<double, 3>;

inline Ycc rgb_to_ycc(double r, double g, double b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return {y, 0.564 * (b - y), 0.713 * (r - y)};
}

inline std::array<double, 3> ycc_to_rgb(const Ycc& v) {
  const double r = v[0] + v[2] / 0.713;
  const double b = v[0] + v[1] / 0.564;
  const double g = (v[0] - 0.299 * r - 0.114 * b) / 0.587;
  return {r, g, b};
}

inline void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw InvalidArgument(std::string(what) + " must be >= 0");
}

inline void require_rgb(const ImageBuffer& img, const char* op) {
  if (img.channels() != 3) throw InvalidArgument(std::string(op) + " requires a 3-channel image");
}

/// Blends `value` into pixel (x, y) with weight alpha on every channel.
inline void blend_pixel(ImageBuffer& img, int x, int y, double value, double alpha) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  for (int c = 0; c < img.channels(); ++c) {
    img.at(x, y, c) = static_cast<float>((1.0 - alpha) * img.at(x, y, c) + alpha * value);
  }
}

}  // namespace featdistill::detail
