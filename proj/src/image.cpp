#include "featdistill/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "featdistill/errors.hpp"

namespace featdistill {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("image channels must be 1 or 3, got " + std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               0.0f);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                          static_cast<std::size_t>(channels)) {
    throw InvalidArgument("image data length does not match width*height*channels");
  }
}

bool bitwise_equal(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.samples().data(), b.samples().data(), a.size() * sizeof(float)) == 0;
}

ImageBuffer new_constant_image(int width, int height, int channels, float value) {
  if (!(value >= 0.0f && value <= 1.0f)) {
    throw InvalidArgument("constant image value must be in [0,1]");
  }
  ImageBuffer img(width, height, channels);
  std::fill(img.samples().begin(), img.samples().end(), value);
  return img;
}

ImageBuffer clamp(ImageBuffer img) {
  for (float& s : img.samples()) s = std::min(std::max(s, 0.0f), 1.0f);
  return img;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw InvalidArgument("psnr: image shapes differ");
  const auto sa = a.samples();
  const auto sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - static_cast<double>(sb[i]);
    sum += d * d;
  }
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sum / static_cast<double>(sa.size());
  return 10.0 * std::log10(1.0 / mse);
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw InvalidArgument("max_abs_diff: image shapes differ");
  double m = 0.0;
  const auto sa = a.samples();
  const auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(sa[i]) - static_cast<double>(sb[i])));
  }
  return m;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float v = img.at(x, y, 0);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = v;
    }
  }
  return out;
}

double mean_luminance(const ImageBuffer& img) {
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.channels() == 1) {
        sum += img.at(x, y, 0);
      } else {
        sum += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      }
    }
  }
  return sum / static_cast<double>(img.pixel_count());
}

float sample_bilinear(const ImageBuffer& img, double x, double y, int c) {
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  ImageBuffer out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = sample_bilinear(img, src_x, src_y, c);
      }
    }
  }
  return out;
}

}  // namespace featdistill
