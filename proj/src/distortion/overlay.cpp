#include <algorithm>
#include <array>
#include <cmath>

#include "featdistill/distortion_ops.hpp"
#include "featdistill/rng.hpp"
#include "kernels.hpp"

namespace featdistill::ops {

namespace {

// 5x7 bitmap glyphs, one row per byte, most significant of 5 bits leftmost.
struct Glyph {
  std::array<std::uint8_t, 7> rows;
};

constexpr std::array<Glyph, 21> kFont = {{
    {{0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},  // 0
    {{0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},  // 1
    {{0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},  // 2
    {{0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},  // 3
    {{0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},  // 4
    {{0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},  // 5
    {{0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},  // 6
    {{0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},  // 7
    {{0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},  // 8
    {{0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},  // 9
    {{0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},  // A
    {{0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},  // C
    {{0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},  // E
    {{0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},  // H
    {{0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},  // I
    {{0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},  // L
    {{0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},  // O
    {{0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},  // P
    {{0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},  // S
    {{0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},  // T
    {{0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},  // X
}};

}  // namespace

ImageBuffer random_occlusion(const ImageBuffer& img, int count, double max_frac,
                             std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("random_occlusion count must be >= 1");
  if (!(max_frac > 0.0 && max_frac <= 0.5)) {
    throw InvalidArgument("random_occlusion max_frac must be in (0, 0.5]");
  }
  SeededRng rng(seed);
  ImageBuffer out = img;
  const int max_w = std::max(1, static_cast<int>(std::floor(max_frac * img.width())));
  const int max_h = std::max(1, static_cast<int>(std::floor(max_frac * img.height())));
  for (int i = 0; i < count; ++i) {
    const auto w = static_cast<int>(rng.uniform_int(1, max_w));
    const auto h = static_cast<int>(rng.uniform_int(1, max_h));
    const auto x0 = static_cast<int>(rng.uniform_int(0, img.width() - w));
    const auto y0 = static_cast<int>(rng.uniform_int(0, img.height() - h));
    const auto gray = static_cast<float>(rng.uniform());
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) {
        for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = gray;
      }
    }
  }
  return out;
}

ImageBuffer text_overlay(const ImageBuffer& img, int count, int scale, double opacity,
                         std::uint64_t seed) {
  if (count < 0) throw InvalidArgument("text_overlay count must be >= 0");
  if (scale < 1) throw InvalidArgument("text_overlay scale must be >= 1");
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw InvalidArgument("text_overlay opacity must be in [0,1]");
  if (count == 0 || opacity == 0.0) return img;
  SeededRng rng(seed);
  ImageBuffer out = img;
  for (int s = 0; s < count; ++s) {
    const auto length = static_cast<int>(rng.uniform_int(3, 8));
    const double value = rng.bernoulli(0.5) ? rng.uniform(0.85, 1.0) : rng.uniform(0.0, 0.15);
    const int text_w = length * 6 * scale;
    const auto x0 = static_cast<int>(rng.uniform_int(-text_w / 4, std::max(0, img.width() - text_w * 3 / 4)));
    const auto y0 = static_cast<int>(rng.uniform_int(0, std::max(0, img.height() - 7 * scale)));
    for (int ch = 0; ch < length; ++ch) {
      const Glyph& glyph = kFont[rng.below(kFont.size())];
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (((glyph.rows[row] >> (4 - col)) & 1) == 0) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) {
              detail::blend_pixel(out, x0 + (ch * 6 + col) * scale + dx, y0 + row * scale + dy,
                                  value, opacity);
            }
          }
        }
      }
    }
  }
  return clamp(std::move(out));
}

ImageBuffer watermark_grid(const ImageBuffer& img, double opacity, int spacing,
                           std::uint64_t seed) {
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw InvalidArgument("watermark_grid opacity must be in [0,1]");
  if (spacing < 4) throw InvalidArgument("watermark_grid spacing must be >= 4");
  if (opacity == 0.0) return img;
  SeededRng rng(seed);
  const auto phase_a = static_cast<int>(rng.below(static_cast<std::uint64_t>(spacing)));
  const auto phase_b = static_cast<int>(rng.below(static_cast<std::uint64_t>(spacing)));
  const double value = rng.bernoulli(0.8) ? 1.0 : 0.0;
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int a = ((x + y + phase_a) % spacing + spacing) % spacing;
      const int b = ((x - y + phase_b) % spacing + spacing) % spacing;
      if (a < 2 || b < 2) detail::blend_pixel(out, x, y, value, opacity);
    }
  }
  return clamp(std::move(out));
}

}  // namespace featdistill::ops
