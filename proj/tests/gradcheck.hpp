#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "featdistill/rng.hpp"
#include "featdistill/trainer.hpp"

namespace testsupport {

using namespace featdistill;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, SeededRng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline Vector random_vector(Eigen::Index n, SeededRng& rng, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

/// Random student, teacher, batch and queue with D <= 16, N <= 8.
struct GradInstance {
  StudentParams student;
  Matrix teacher;
  FeatureBatch batch;
  NegativeQueue queue{64};
};

inline GradInstance random_grad_instance(std::uint64_t seed) {
  SeededRng rng(seed);
  const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(15));
  const std::size_t n = 1 + rng.below(8);
  const Eigen::Index t = 1 + static_cast<Eigen::Index>(rng.below(4));
  GradInstance inst;
  inst.student.projector = Matrix::Identity(d, d) + random_matrix(d, d, rng, 0.3);
  inst.student.head.weights = random_vector(d, rng, 0.5);
  inst.student.head.bias = 0.3 * rng.normal();
  inst.teacher = Matrix::Identity(d, d) + random_matrix(d, d, rng, 0.3);
  for (std::size_t i = 0; i < n; ++i) {
    inst.batch.views.push_back(make_feature_map(random_matrix(t, d, rng)));
    inst.batch.second_views.push_back(make_feature_map(random_matrix(t, d, rng)));
    inst.batch.labels.push_back(static_cast<int>(rng.below(2)));
  }
  const std::size_t negatives = rng.below(20);
  for (std::size_t i = 0; i < negatives; ++i) inst.queue.push(random_vector(d, rng));
  return inst;
}

// Central differences over every projector entry, head weight and the bias.
inline double fd_relative_error(const GradInstance& inst, const ObjectiveWeights& w) {
  constexpr double h = 1e-5;
  Gradients analytic;
  objective(inst.student, &inst.teacher, inst.batch, inst.queue, w, &analytic);
  auto f = [&](const StudentParams& s) { return objective(s, &inst.teacher, inst.batch, inst.queue, w).total; };

  std::vector<double> a, n;
  StudentParams s = inst.student;
  for (Eigen::Index i = 0; i < s.projector.size(); ++i) {
    const double keep = s.projector.data()[i];
    s.projector.data()[i] = keep + h;
    const double up = f(s);
    s.projector.data()[i] = keep - h;
    const double down = f(s);
    s.projector.data()[i] = keep;
    n.push_back((up - down) / (2 * h));
    a.push_back(analytic.projector.data()[i]);
  }
  for (Eigen::Index i = 0; i < s.head.weights.size(); ++i) {
    const double keep = s.head.weights(i);
    s.head.weights(i) = keep + h;
    const double up = f(s);
    s.head.weights(i) = keep - h;
    const double down = f(s);
    s.head.weights(i) = keep;
    n.push_back((up - down) / (2 * h));
    a.push_back(analytic.weights(i));
  }
  const double keep = s.head.bias;
  s.head.bias = keep + h;
  const double up = f(s);
  s.head.bias = keep - h;
  const double down = f(s);
  n.push_back((up - down) / (2 * h));
  a.push_back(analytic.bias);

  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / denom;
}

}  // namespace testsupport
