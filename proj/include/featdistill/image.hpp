#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace featdistill {

/// H x W x C raster of normalized samples, row-major, channels interleaved.
/// Channels is 1 or 3. Public operations keep every sample in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, int channels);
  ImageBuffer(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<float> samples() { return data_; }
  std::span<const float> samples() const { return data_; }

  bool same_shape(const ImageBuffer& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_;
  int height_;
  int channels_;
  std::vector<float> data_;
};

/// Bitwise equality of shape and sample bytes (distinguishes -0.0 from 0.0).
bool bitwise_equal(const ImageBuffer& a, const ImageBuffer& b);

ImageBuffer new_constant_image(int width, int height, int channels, float value);

/// min(max(s, 0), 1) on every sample.
ImageBuffer clamp(ImageBuffer img);

/// 10*log10(1/MSE) with peak 1.0; +infinity when the images are identical.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b);

/// Replicates a single channel to RGB; returns RGB input unchanged.
ImageBuffer to_rgb(const ImageBuffer& img);

/// Mean of Rec.601 luma (or the single channel for grayscale).
double mean_luminance(const ImageBuffer& img);

/// Bilinear sample at continuous pixel-center coordinates; out-of-frame
/// positions replicate the nearest edge pixel.
float sample_bilinear(const ImageBuffer& img, double x, double y, int c);

/// Bilinear resize with half-pixel centers. Same-size input is returned as is.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

}  // namespace featdistill
