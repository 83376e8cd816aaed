#include "kernels.hpp"

#include <algorithm>
#include <numeric>

namespace featdistill::detail {

void Kernel2D::normalize() {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= sum;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

ImageBuffer convolve_separable(const ImageBuffer& img, std::span<const double> kx,
                               std::span<const double> ky) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -rx; i <= rx; ++i) {
          acc += kx[static_cast<std::size_t>(i + rx)] * img.at(reflect_index(x + i, w), y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
    }
  }
  ImageBuffer out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -ry; i <= ry; ++i) {
          const int yy = reflect_index(y + i, h);
          acc += ky[static_cast<std::size_t>(i + ry)] * tmp[(static_cast<std::size_t>(yy) * w + x) * ch + c];
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

ImageBuffer convolve(const ImageBuffer& img, const Kernel2D& kernel) {
  const int w = img.width();
  const int h = img.height();
  ImageBuffer out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int dy = -kernel.radius_y; dy <= kernel.radius_y; ++dy) {
          const int yy = reflect_index(y + dy, h);
          for (int dx = -kernel.radius_x; dx <= kernel.radius_x; ++dx) {
            const double k = kernel.at(dx, dy);
            if (k == 0.0) continue;
            acc += k * img.at(reflect_index(x + dx, w), yy, c);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace featdistill::detail
