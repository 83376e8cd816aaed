#include "featdistill/toy.hpp"

#include <cmath>

#include "featdistill/errors.hpp"

namespace featdistill {

ToyFeatureWorld::ToyFeatureWorld(const ToyWorldParams& params, std::uint64_t seed)
    : params_(params), seed_(seed) {
  if (params.tokens == 0 || params.robust_dims >= params.dim) {
    throw InvalidArgument("toy world needs tokens > 0 and robust_dims < dim");
  }
  SeededRng rng(mix64(seed, 0xD1EC7));
  const auto d = static_cast<Eigen::Index>(params.dim);
  for (auto& dir : directions_) {
    dir.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      dir(i) = static_cast<std::size_t>(i) < params.robust_dims ? 0.0 : rng.normal();
    }
    if (dir.norm() > 0.0) dir.normalize();
  }
}

const Vector& ToyFeatureWorld::category_direction(Category category) const {
  return directions_.at(static_cast<std::size_t>(category));
}

FeatureMap ToyFeatureWorld::clean(std::uint64_t index, int label) const {
  if (label != 0 && label != 1) throw InvalidArgument("toy label must be 0 or 1");
  SeededRng rng(mix64(seed_, index));
  const double sign = label == 1 ? 1.0 : -1.0;
  const auto d = static_cast<Eigen::Index>(params_.dim);
  Vector base(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const bool robust = static_cast<std::size_t>(i) < params_.robust_dims;
    const double mean = sign * (robust ? params_.robust_separation : params_.fragile_separation);
    base(i) = mean + params_.item_noise * rng.normal();
  }
  Matrix tokens(static_cast<Eigen::Index>(params_.tokens), d);
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    for (Eigen::Index i = 0; i < d; ++i) tokens(t, i) = base(i) + params_.token_noise * rng.normal();
  }
  return make_feature_map(std::move(tokens));
}

FeatureMap ToyFeatureWorld::distort(const FeatureMap& features, const DistortionSpec& spec) const {
  if (static_cast<std::size_t>(features.dim()) != params_.dim) throw InvalidArgument("toy feature dim mismatch");
  const double s = spec.severity;
  const double keep = std::max(0.0, 1.0 - params_.fragile_attenuation * s);
  const double fill = std::sqrt(1.0 - keep * keep) * params_.item_noise;
  const Vector& dir = category_direction(operator_info(spec.op).category);
  SeededRng rng(spec.seed);
  const auto robust = static_cast<Eigen::Index>(params_.robust_dims);
  Vector replacement(features.tokens.cols());
  for (Eigen::Index i = 0; i < replacement.size(); ++i) replacement(i) = fill * rng.normal();
  Matrix tokens = features.tokens;
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    for (Eigen::Index i = 0; i < tokens.cols(); ++i) {
      double v = tokens(t, i);
      if (i >= robust) v = keep * v + replacement(i);
      tokens(t, i) = v + params_.shift * s * dir(i) + params_.noise * s * rng.normal();
    }
  }
  return make_feature_map(std::move(tokens));
}

FeatureMap ToyFeatureWorld::sample(std::uint64_t index, int label,
                                   const std::optional<DistortionSpec>& spec) const {
  FeatureMap features = clean(index, label);
  return spec ? distort(features, *spec) : features;
}

ToyBatchSource::ToyBatchSource(const ToyFeatureWorld& world, std::vector<int> labels, std::size_t batch_size,
                               PipelineMode mode, std::uint64_t seed)
    : world_(world), batch_size_(batch_size), mode_(mode), seed_(seed) {
  records_.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    records_.push_back({"toy/" + std::to_string(i), labels[i], "toy", Split::Train, std::nullopt});
  }
  per_epoch_ = balanced_batches(records_, batch_size_, seed_, 0).size();
}

FeatureBatch ToyBatchSource::batch(std::uint64_t epoch, std::size_t index, bool two_views) const {
  const auto plans = balanced_batches(records_, batch_size_, seed_, epoch);
  const BatchPlan& plan = plans.at(index);
  FeatureBatch out;
  for (std::size_t k = 0; k < plan.items.size(); ++k) {
    const std::size_t item = plan.items[k];
    const int label = records_[item].label;
    const std::uint64_t slot = index * batch_size_ + k;
    SeededRng rng(item_seed(seed_, epoch, slot, 0));
    out.views.push_back(world_.sample(item, label, sample_spec(rng, mode_)));
    if (two_views) {
      SeededRng rng2(item_seed(seed_, epoch, slot, 1));
      out.second_views.push_back(world_.sample(item, label, sample_spec(rng2, mode_)));
    }
    out.labels.push_back(label);
  }
  return out;
}

std::vector<int> alternating_labels(std::size_t count) {
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % 2);
  return labels;
}

}  // namespace featdistill
