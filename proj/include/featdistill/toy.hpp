#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "featdistill/trainer.hpp"

namespace featdistill {

/// Feature-level stand-in for a detection task under degradations. Each item
/// has a class-dependent base vector; the first `robust_dims` coordinates
/// separate the classes weakly, the rest ("fragile") strongly. A distortion
/// of severity s keeps a = 1 - attenuation * s of each fragile coordinate and
/// fills the rest with per-item noise of matching variance, shifts every
/// token along a per-category direction inside the fragile subspace by shift * s and adds token noise
/// with sd noise * s.
struct ToyWorldParams {
  std::size_t tokens = 4;
  std::size_t dim = 16;
  std::size_t robust_dims = 8;
  double robust_separation = 0.5;
  double fragile_separation = 1.5;
  double item_noise = 1.0;
  double token_noise = 0.5;
  double fragile_attenuation = 0.18;
  double shift = 1.5;
  double noise = 0.15;
};

class ToyFeatureWorld {
 public:
  ToyFeatureWorld(const ToyWorldParams& params, std::uint64_t seed);

  const ToyWorldParams& params() const { return params_; }
  const Vector& category_direction(Category category) const;

  /// Undistorted features of item `index`; a pure function of (seed, index, label).
  FeatureMap clean(std::uint64_t index, int label) const;
  /// Applies the feature-level effect of `spec`; noise is drawn from spec.seed.
  FeatureMap distort(const FeatureMap& features, const DistortionSpec& spec) const;
  FeatureMap sample(std::uint64_t index, int label, const std::optional<DistortionSpec>& spec) const;

 private:
  ToyWorldParams params_;
  std::uint64_t seed_;
  std::array<Vector, 8> directions_;
};

/// Balanced batches over `labels.size()` world items. Each slot draws its own
/// distortion from `mode` with item_seed(seed, epoch, slot, view).
class ToyBatchSource final : public BatchSource {
 public:
  ToyBatchSource(const ToyFeatureWorld& world, std::vector<int> labels, std::size_t batch_size,
                 PipelineMode mode, std::uint64_t seed);

  std::size_t dim() const override { return world_.params().dim; }
  std::size_t batches_per_epoch() const override { return per_epoch_; }
  FeatureBatch batch(std::uint64_t epoch, std::size_t index, bool two_views) const override;

 private:
  const ToyFeatureWorld& world_;
  std::vector<ManifestRecord> records_;
  std::size_t batch_size_;
  PipelineMode mode_;
  std::uint64_t seed_;
  std::size_t per_epoch_;
};

/// Alternating 0/1 labels.
std::vector<int> alternating_labels(std::size_t count);

}  // namespace featdistill
