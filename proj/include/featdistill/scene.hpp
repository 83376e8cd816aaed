#pragma once

#include <cstdint>
#include <vector>

#include "featdistill/image.hpp"

namespace featdistill {

/// Procedural "natural-like" RGB scene: a lit gradient background, fractal
/// value noise, soft-edged shapes and a faint fine-grain texture. Used as a
/// stand-in corpus wherever real photographs would be.
ImageBuffer make_scene(std::uint64_t seed, int width, int height);

/// `count` scenes with seeds derived from `seed`.
std::vector<ImageBuffer> make_scene_corpus(std::uint64_t seed, int count, int width, int height);

}  // namespace featdistill
