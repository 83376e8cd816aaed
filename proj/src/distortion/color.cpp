#include <cmath>

#include "featdistill/distortion_ops.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

namespace {

// Blends each RGB pixel toward (factor < 1) or away from (factor > 1) its luma.
ImageBuffer scale_chroma(ImageBuffer out, double factor) {
  if (out.channels() != 3) return out;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double luma = 0.299 * out.at(x, y, 0) + 0.587 * out.at(x, y, 1) + 0.114 * out.at(x, y, 2);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(luma + factor * (out.at(x, y, c) - luma));
      }
    }
  }
  return out;
}

}  // namespace

ImageBuffer color_cast(const ImageBuffer& img, const std::array<double, 3>& gains) {
  detail::require_rgb(img, "color_cast");
  for (double g : gains) detail::require_nonnegative(g, "color_cast gain");
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(gains[c] * img.at(x, y, c));
    }
  }
  return clamp(std::move(out));
}

ImageBuffer saturation_shift(const ImageBuffer& img, double factor) {
  detail::require_nonnegative(factor, "saturation_shift factor");
  if (factor == 1.0) return img;
  return clamp(scale_chroma(img, factor));
}

ImageBuffer contrast_shift(const ImageBuffer& img, double factor) {
  detail::require_nonnegative(factor, "contrast_shift factor");
  if (factor == 1.0) return img;
  const double mean = mean_luminance(img);
  ImageBuffer out = img;
  for (float& s : out.samples()) s = static_cast<float>(mean + factor * (s - mean));
  return clamp(std::move(out));
}

ImageBuffer gamma_shift(const ImageBuffer& img, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma_shift gamma must be > 0");
  if (gamma == 1.0) return img;
  ImageBuffer out = img;
  for (float& s : out.samples()) s = static_cast<float>(std::pow(static_cast<double>(s), gamma));
  return clamp(std::move(out));
}

ImageBuffer posterize(const ImageBuffer& img, int levels) {
  if (levels < 2) throw InvalidArgument("posterize levels must be >= 2");
  const double top = levels - 1;
  ImageBuffer out = img;
  for (float& s : out.samples()) s = static_cast<float>(std::round(s * top) / top);
  return clamp(std::move(out));
}

ImageBuffer color_adjust(const ImageBuffer& img, double brightness, double contrast,
                         double saturation) {
  detail::require_nonnegative(contrast, "color_adjust contrast");
  detail::require_nonnegative(saturation, "color_adjust saturation");
  if (brightness == 0.0 && contrast == 1.0 && saturation == 1.0) return img;
  ImageBuffer out = img;
  for (float& s : out.samples()) s = static_cast<float>(0.5 + contrast * (s + brightness - 0.5));
  return clamp(scale_chroma(std::move(out), saturation));
}

}  // namespace featdistill::ops
