#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "featdistill/image.hpp"

namespace featdistill {

/// Loads an 8-bit PNG as v/255 samples. Gray and gray+alpha load as one
/// channel, everything else as RGB (alpha dropped).
ImageBuffer load_png(const std::filesystem::path& path);

/// Saves round(v*255) as 8-bit PNG (gray or RGB).
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

/// Baseline JPEG with the pinned encoder settings: integer slow DCT, 4:4:4
/// sampling, standard Huffman tables, no progressive mode.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality);
ImageBuffer decode_jpeg(const std::vector<std::uint8_t>& bytes);

std::uint8_t to_byte(float v);

}  // namespace featdistill
