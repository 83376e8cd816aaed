#include "featdistill/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "featdistill/rng.hpp"

namespace featdistill {

namespace {

using Color = std::array<double, 3>;

Color random_color(SeededRng& rng) {
  return {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
}

// Bilinearly interpolated lattice noise; cells of `cell` pixels.
class ValueNoise {
 public:
  ValueNoise(SeededRng& rng, int width, int height, double cell)
      : cell_(cell),
        gw_(static_cast<int>(std::ceil(width / cell)) + 2),
        gh_(static_cast<int>(std::ceil(height / cell)) + 2),
        grid_(static_cast<std::size_t>(gw_) * gh_) {
    for (double& v : grid_) v = rng.uniform(-1.0, 1.0);
  }

  double at(double x, double y) const {
    const double gx = x / cell_;
    const double gy = y / cell_;
    const int x0 = static_cast<int>(gx);
    const int y0 = static_cast<int>(gy);
    double fx = gx - x0;
    double fy = gy - y0;
    fx = fx * fx * (3.0 - 2.0 * fx);
    fy = fy * fy * (3.0 - 2.0 * fy);
    const double a = node(x0, y0) * (1 - fx) + node(x0 + 1, y0) * fx;
    const double b = node(x0, y0 + 1) * (1 - fx) + node(x0 + 1, y0 + 1) * fx;
    return a * (1 - fy) + b * fy;
  }

 private:
  double node(int x, int y) const { return grid_[static_cast<std::size_t>(y) * gw_ + x]; }

  double cell_;
  int gw_;
  int gh_;
  std::vector<double> grid_;
};

struct Shape {
  bool circle;
  double cx, cy, rx, ry, softness;
  Color color;
};

}  // namespace

ImageBuffer make_scene(std::uint64_t seed, int width, int height) {
  SeededRng rng(seed);
  const Color top = random_color(rng);
  const Color bottom = random_color(rng);
  const double size = std::max(width, height);

  std::vector<ValueNoise> octaves;
  std::vector<double> amplitudes;
  double cell = size / 2.0;
  double amp = 0.18;
  for (int o = 0; o < 4 && cell >= 2.0; ++o) {
    octaves.emplace_back(rng, width, height, cell);
    amplitudes.push_back(amp);
    cell /= 2.0;
    amp *= 0.55;
  }
  const Color tint = {rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};

  std::vector<Shape> shapes(static_cast<std::size_t>(rng.uniform_int(3, 7)));
  for (Shape& s : shapes) {
    s.circle = rng.bernoulli(0.5);
    s.cx = rng.uniform(0.0, width);
    s.cy = rng.uniform(0.0, height);
    s.rx = rng.uniform(0.08, 0.3) * width;
    s.ry = rng.uniform(0.08, 0.3) * height;
    s.softness = rng.uniform(0.5, 2.5);
    s.color = random_color(rng);
  }
  const double grain = rng.uniform(0.01, 0.03);

  ImageBuffer img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    const double t = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    for (int x = 0; x < width; ++x) {
      double n = 0.0;
      for (std::size_t o = 0; o < octaves.size(); ++o) n += amplitudes[o] * octaves[o].at(x, y);
      Color px;
      for (int c = 0; c < 3; ++c) px[c] = (1 - t) * top[c] + t * bottom[c] + n * tint[c];
      for (const Shape& s : shapes) {
        double dist;  // signed distance in pixels, negative inside
        if (s.circle) {
          const double dx = (x - s.cx) / s.rx;
          const double dy = (y - s.cy) / s.ry;
          dist = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(s.rx, s.ry);
        } else {
          dist = std::max(std::abs(x - s.cx) - s.rx, std::abs(y - s.cy) - s.ry);
        }
        const double alpha = 1.0 / (1.0 + std::exp(dist / s.softness));
        for (int c = 0; c < 3; ++c) {
          const double shaded = s.color[c] + 0.5 * n;
          px[c] = (1 - alpha) * px[c] + alpha * shaded;
        }
      }
      for (int c = 0; c < 3; ++c) {
        const double v = px[c] + grain * rng.normal();
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

std::vector<ImageBuffer> make_scene_corpus(std::uint64_t seed, int count, int width, int height) {
  std::vector<ImageBuffer> corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    corpus.push_back(make_scene(mix64(seed, static_cast<std::uint64_t>(i)), width, height));
  }
  return corpus;
}

}  // namespace featdistill
