#pragma once

#include <array>
#include <cstdint>

#include "featdistill/image.hpp"

// Individual degradation operators. Every function returns a new image with
// the input's shape and samples clamped to [0,1]. Convolutions use reflect
// edges; geometric resamplers use bilinear interpolation with edge
// replication.
namespace featdistill::ops {

// blur
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);
ImageBuffer motion_blur(const ImageBuffer& img, int kernel_len, double angle_deg);
ImageBuffer defocus_blur(const ImageBuffer& img, double radius);
/// Long-tailed turbulence blur: 0.7*G(sigma) + 0.3*G(3*sigma).
ImageBuffer atmospheric_blur(const ImageBuffer& img, double sigma);
ImageBuffer zoom_blur(const ImageBuffer& img, double strength);

// noise
ImageBuffer gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed);
/// Shot noise with photon count 1/scale at full white.
ImageBuffer poisson_noise(const ImageBuffer& img, double scale, std::uint64_t seed);
ImageBuffer iso_noise(const ImageBuffer& img, double sigma, std::uint64_t seed);
ImageBuffer salt_pepper(const ImageBuffer& img, double amount, std::uint64_t seed);
ImageBuffer banding_noise(const ImageBuffer& img, double amplitude, std::uint64_t seed);

// compression
ImageBuffer jpeg_compress(const ImageBuffer& img, int quality);
/// Three-level CDF 5/3 wavelet with dead-zone quantization of detail bands.
ImageBuffer wavelet_compress(const ImageBuffer& img, double step);
/// Truncated-sinc low-pass; cutoff is a fraction of Nyquist.
ImageBuffer ringing(const ImageBuffer& img, double cutoff);
ImageBuffer chroma_blockiness(const ImageBuffer& img, int block, double luma_blend);
ImageBuffer recompress(const ImageBuffer& img, int first_quality, int second_quality);

// color
ImageBuffer color_cast(const ImageBuffer& img, const std::array<double, 3>& gains);
ImageBuffer saturation_shift(const ImageBuffer& img, double factor);
ImageBuffer contrast_shift(const ImageBuffer& img, double factor);
ImageBuffer gamma_shift(const ImageBuffer& img, double gamma);
ImageBuffer posterize(const ImageBuffer& img, int levels);
ImageBuffer color_adjust(const ImageBuffer& img, double brightness, double contrast,
                         double saturation);

// geometric
using CornerOffsets = std::array<std::array<double, 2>, 4>;
/// Seeded displacements of the TL, TR, BR, BL corners, each coordinate in
/// [-corner_jitter*min(W,H), +corner_jitter*min(W,H)].
CornerOffsets perspective_corner_offsets(int width, int height, double corner_jitter,
                                         std::uint64_t seed);
ImageBuffer perspective_warp(const ImageBuffer& img, double corner_jitter, std::uint64_t seed);
/// Radial warp; k > 0 barrel, k < 0 pincushion. Corners stay fixed.
ImageBuffer lens_distortion(const ImageBuffer& img, double k);
ImageBuffer down_up_resize(const ImageBuffer& img, double factor);
ImageBuffer rotation_crop(const ImageBuffer& img, double angle_deg);

// environmental
ImageBuffer fog(const ImageBuffer& img, double density, std::uint64_t seed);
ImageBuffer rain(const ImageBuffer& img, double density, int length, std::uint64_t seed);
ImageBuffer snow(const ImageBuffer& img, double density, std::uint64_t seed);
ImageBuffer shadow_mask(const ImageBuffer& img, double strength, std::uint64_t seed);

// sensor
ImageBuffer sensor_blooming(const ImageBuffer& img, double threshold, double spread);
ImageBuffer vignette(const ImageBuffer& img, double strength);
ImageBuffer hot_pixels(const ImageBuffer& img, double fraction, std::uint64_t seed);

// occlusion / overlay
ImageBuffer random_occlusion(const ImageBuffer& img, int count, double max_frac,
                             std::uint64_t seed);
ImageBuffer text_overlay(const ImageBuffer& img, int count, int scale, double opacity,
                         std::uint64_t seed);
ImageBuffer watermark_grid(const ImageBuffer& img, double opacity, int spacing,
                           std::uint64_t seed);
ImageBuffer screenshot_border(const ImageBuffer& img, double fraction, std::uint64_t seed);

// filtering: kind 0 smooths, kind 1 sharpens (unsharp mask)
ImageBuffer filter(const ImageBuffer& img, int kind, double amount);

}  // namespace featdistill::ops
