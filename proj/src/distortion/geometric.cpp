#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/rng.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

CornerOffsets perspective_corner_offsets(int width, int height, double corner_jitter,
                                         std::uint64_t seed) {
  if (!(corner_jitter >= 0.0 && corner_jitter <= 0.25)) {
    throw InvalidArgument("perspective_warp corner_jitter must be in [0, 0.25]");
  }
  const double limit = corner_jitter * std::min(width, height);
  SeededRng rng(seed);
  CornerOffsets offsets{};
  for (auto& corner : offsets) {
    corner[0] = rng.uniform(-limit, limit);
    corner[1] = rng.uniform(-limit, limit);
  }
  return offsets;
}

ImageBuffer perspective_warp(const ImageBuffer& img, double corner_jitter, std::uint64_t seed) {
  const CornerOffsets offsets =
      perspective_corner_offsets(img.width(), img.height(), corner_jitter, seed);
  const double w = img.width() - 1;
  const double h = img.height() - 1;
  const std::array<std::array<double, 2>, 4> dst = {{{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}}};

  // Homography from output pixel to source pixel: dst corner i -> dst_i + offset_i.
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = dst[i][0];
    const double y = dst[i][1];
    const double u = x + offsets[i][0];
    const double v = y + offsets[i][1];
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::Matrix<double, 8, 1> hcoef;
  if (img.width() == 1 || img.height() == 1) {
    // Degenerate corner set; a pure translation by the mean offset.
    double tx = 0.0;
    double ty = 0.0;
    for (const auto& o : offsets) {
      tx += o[0] / 4.0;
      ty += o[1] / 4.0;
    }
    hcoef << 1, 0, tx, 0, 1, ty, 0, 0;
  } else {
    hcoef = a.fullPivLu().solve(b);
  }
  const ImageBuffer out = detail::warp(img, [&](double x, double y) {
    const double den = hcoef(6) * x + hcoef(7) * y + 1.0;
    return std::array<double, 2>{(hcoef(0) * x + hcoef(1) * y + hcoef(2)) / den,
                                 (hcoef(3) * x + hcoef(4) * y + hcoef(5)) / den};
  });
  return clamp(out);
}

ImageBuffer lens_distortion(const ImageBuffer& img, double k) {
  if (!(k > -1.0)) throw InvalidArgument("lens_distortion k must be > -1");
  if (k == 0.0) return img;
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  const double norm = std::max(cx * cx + cy * cy, 1e-12);
  return clamp(detail::warp(img, [&](double x, double y) {
    const double dx = x - cx;
    const double dy = y - cy;
    const double r2 = (dx * dx + dy * dy) / norm;
    const double s = (1.0 + k * r2) / (1.0 + k);
    return std::array<double, 2>{cx + dx * s, cy + dy * s};
  }));
}

ImageBuffer down_up_resize(const ImageBuffer& img, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw InvalidArgument("down_up_resize factor must be in (0,1]");
  if (factor == 1.0) return img;
  const int w = std::max(1, static_cast<int>(std::lround(img.width() * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height() * factor)));
  return clamp(resize_bilinear(resize_bilinear(img, w, h), img.width(), img.height()));
}

ImageBuffer rotation_crop(const ImageBuffer& img, double angle_deg) {
  if (angle_deg == 0.0) return img;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double w = img.width();
  const double h = img.height();
  // Zoom so the rotated frame covers the output completely.
  const double zoom = std::abs(cs) + std::abs(sn) * std::max(w / h, h / w);
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  return clamp(detail::warp(img, [&](double x, double y) {
    const double dx = (x - cx) / zoom;
    const double dy = (y - cy) / zoom;
    return std::array<double, 2>{cx + cs * dx + sn * dy, cy - sn * dx + cs * dy};
  }));
}

ImageBuffer screenshot_border(const ImageBuffer& img, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 0.3)) {
    throw InvalidArgument("screenshot_border fraction must be in [0, 0.3)");
  }
  const int border = static_cast<int>(std::lround(fraction * std::min(img.width(), img.height())));
  if (border == 0) return img;
  const int bar = 2 * border;
  const int inner_w = std::max(1, img.width() - 2 * border);
  const int inner_h = std::max(1, img.height() - border - bar);
  const ImageBuffer content = resize_bilinear(img, inner_w, inner_h);
  SeededRng rng(seed);
  const double frame = rng.uniform(0.75, 0.95);
  const double title = rng.uniform(0.15, 0.4);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int ix = x - border;
      const int iy = y - bar;
      for (int c = 0; c < img.channels(); ++c) {
        if (ix >= 0 && iy >= 0 && ix < inner_w && iy < inner_h) {
          out.at(x, y, c) = content.at(ix, iy, c);
        } else {
          out.at(x, y, c) = static_cast<float>(y < bar ? title : frame);
        }
      }
    }
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
