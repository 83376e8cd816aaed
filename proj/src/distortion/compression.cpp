#include <algorithm>
#include <cmath>
#include <numbers>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/image_io.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

namespace {

// CDF 5/3 lifting with symmetric extension; output is [low band | high band].
void lift_forward(std::vector<double>& x, std::vector<double>& scratch) {
  const std::size_t n = x.size();
  if (n < 2) return;
  const std::size_t ns = (n + 1) / 2;
  const std::size_t nd = n / 2;
  scratch.assign(n, 0.0);
  double* s = scratch.data();
  double* d = scratch.data() + ns;
  for (std::size_t i = 0; i < nd; ++i) {
    const double right = (2 * i + 2 < n) ? x[2 * i + 2] : x[2 * i];
    d[i] = x[2 * i + 1] - 0.5 * (x[2 * i] + right);
  }
  for (std::size_t i = 0; i < ns; ++i) {
    const double dl = i > 0 ? d[i - 1] : d[0];
    const double dr = i < nd ? d[i] : d[nd - 1];
    s[i] = x[2 * i] + 0.25 * (dl + dr);
  }
  x = scratch;
}

void lift_inverse(std::vector<double>& x, std::vector<double>& scratch) {
  const std::size_t n = x.size();
  if (n < 2) return;
  const std::size_t ns = (n + 1) / 2;
  const std::size_t nd = n / 2;
  const double* s = x.data();
  const double* d = x.data() + ns;
  scratch.assign(n, 0.0);
  for (std::size_t i = 0; i < ns; ++i) {
    const double dl = i > 0 ? d[i - 1] : d[0];
    const double dr = i < nd ? d[i] : d[nd - 1];
    scratch[2 * i] = s[i] - 0.25 * (dl + dr);
  }
  for (std::size_t i = 0; i < nd; ++i) {
    const double right = (2 * i + 2 < n) ? scratch[2 * i + 2] : scratch[2 * i];
    scratch[2 * i + 1] = d[i] + 0.5 * (scratch[2 * i] + right);
  }
  x = scratch;
}

void transform_2d(std::vector<double>& plane, int width, int w, int h, bool inverse) {
  std::vector<double> line;
  std::vector<double> scratch;
  auto rows = [&] {
    for (int y = 0; y < h; ++y) {
      line.assign(plane.begin() + static_cast<std::ptrdiff_t>(y) * width,
                  plane.begin() + static_cast<std::ptrdiff_t>(y) * width + w);
      inverse ? lift_inverse(line, scratch) : lift_forward(line, scratch);
      std::copy(line.begin(), line.end(), plane.begin() + static_cast<std::ptrdiff_t>(y) * width);
    }
  };
  auto cols = [&] {
    for (int x = 0; x < w; ++x) {
      line.resize(static_cast<std::size_t>(h));
      for (int y = 0; y < h; ++y) line[static_cast<std::size_t>(y)] = plane[static_cast<std::size_t>(y) * width + x];
      inverse ? lift_inverse(line, scratch) : lift_forward(line, scratch);
      for (int y = 0; y < h; ++y) plane[static_cast<std::size_t>(y) * width + x] = line[static_cast<std::size_t>(y)];
    }
  };
  if (inverse) {
    cols();
    rows();
  } else {
    rows();
    cols();
  }
}

}  // namespace

ImageBuffer jpeg_compress(const ImageBuffer& img, int quality) {
  if (quality < 1 || quality > 100) throw InvalidArgument("jpeg quality must be in 1..100");
  return decode_jpeg(encode_jpeg(img, quality));
}

ImageBuffer recompress(const ImageBuffer& img, int first_quality, int second_quality) {
  return jpeg_compress(jpeg_compress(img, first_quality), second_quality);
}

ImageBuffer wavelet_compress(const ImageBuffer& img, double step) {
  detail::require_nonnegative(step, "wavelet_compress step");
  if (step == 0.0) return img;
  constexpr int kLevels = 3;
  const int width = img.width();
  const int height = img.height();
  ImageBuffer out(width, height, img.channels());
  std::vector<double> plane(img.pixel_count());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) plane[static_cast<std::size_t>(y) * width + x] = img.at(x, y, c);
    }
    std::vector<std::pair<int, int>> sizes;
    int w = width;
    int h = height;
    for (int level = 0; level < kLevels && (w > 1 || h > 1); ++level) {
      sizes.emplace_back(w, h);
      transform_2d(plane, width, w, h, false);
      w = (w + 1) / 2;
      h = (h + 1) / 2;
    }
    // Dead-zone quantization of everything outside the final low band.
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (x < w && y < h) continue;
        double& v = plane[static_cast<std::size_t>(y) * width + x];
        v = std::abs(v) < step ? 0.0 : std::round(v / step) * step;
      }
    }
    for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
      transform_2d(plane, width, it->first, it->second, true);
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        out.at(x, y, c) = static_cast<float>(plane[static_cast<std::size_t>(y) * width + x]);
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer ringing(const ImageBuffer& img, double cutoff) {
  if (!(cutoff > 0.0)) throw InvalidArgument("ringing cutoff must be > 0");
  if (cutoff >= 1.0) return img;
  constexpr int kRadius = 10;
  std::vector<double> k(2 * kRadius + 1);
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    const double a = std::numbers::pi * cutoff * i;
    const double w = i == 0 ? cutoff : cutoff * std::sin(a) / a;
    k[static_cast<std::size_t>(i + kRadius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return clamp(detail::convolve_separable(img, k, k));
}

ImageBuffer chroma_blockiness(const ImageBuffer& img, int block, double luma_blend) {
  if (block < 1) throw InvalidArgument("chroma_blockiness block must be >= 1");
  if (luma_blend < 0.0 || luma_blend > 1.0) {
    throw InvalidArgument("chroma_blockiness luma_blend must be in [0,1]");
  }
  if (block == 1 && luma_blend == 0.0) return img;
  const int width = img.width();
  const int height = img.height();
  std::vector<detail::Ycc> ycc(img.pixel_count());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      ycc[static_cast<std::size_t>(y) * width + x] =
          img.channels() == 3 ? detail::rgb_to_ycc(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2))
                              : detail::Ycc{img.at(x, y, 0), 0.0, 0.0};
    }
  }
  ImageBuffer out(width, height, img.channels());
  for (int by = 0; by < height; by += block) {
    for (int bx = 0; bx < width; bx += block) {
      const int ey = std::min(by + block, height);
      const int ex = std::min(bx + block, width);
      detail::Ycc mean{0.0, 0.0, 0.0};
      for (int y = by; y < ey; ++y) {
        for (int x = bx; x < ex; ++x) {
          for (int c = 0; c < 3; ++c) mean[c] += ycc[static_cast<std::size_t>(y) * width + x][c];
        }
      }
      const double n = static_cast<double>((ey - by) * (ex - bx));
      for (double& m : mean) m /= n;
      for (int y = by; y < ey; ++y) {
        for (int x = bx; x < ex; ++x) {
          const detail::Ycc& p = ycc[static_cast<std::size_t>(y) * width + x];
          const detail::Ycc q{(1.0 - luma_blend) * p[0] + luma_blend * mean[0], mean[1], mean[2]};
          if (img.channels() == 1) {
            out.at(x, y, 0) = static_cast<float>(q[0]);
          } else {
            const auto rgb = detail::ycc_to_rgb(q);
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(rgb[c]);
          }
        }
      }
    }
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
