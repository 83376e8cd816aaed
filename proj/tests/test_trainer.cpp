#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "featdistill/errors.hpp"
#include "featdistill/metrics.hpp"
#include "featdistill/rng.hpp"
#include "featdistill/trainer.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace featdistill;

namespace {

using testsupport::random_matrix;
using testsupport::random_vector;

FeatureMap fm(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return make_feature_map(m);
}

Vector unit(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v / v.norm();
}

// Two Gaussian blobs in D=8 with one token per item, reshuffled every epoch.
class BlobSource final : public BatchSource {
 public:
  BlobSource(std::size_t items, std::size_t batch_size, std::uint64_t seed, double separation = 3.0)
      : batch_size_(batch_size), seed_(seed) {
    SeededRng rng(seed);
    Vector direction = random_vector(8, rng);
    direction /= direction.norm();
    for (std::size_t i = 0; i < items; ++i) {
      const int label = static_cast<int>(i % 2);
      Vector x = random_vector(8, rng, 0.5) + (label ? 0.5 : -0.5) * separation * direction;
      items_.push_back(make_feature_map(Matrix(x.transpose())));
      labels_.push_back(label);
    }
  }

  std::size_t dim() const override { return 8; }
  std::size_t batches_per_epoch() const override { return items_.size() / batch_size_; }

  FeatureBatch batch(std::uint64_t epoch, std::size_t index, bool two_views) const override {
    std::vector<std::size_t> order(items_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 engine(mix64(seed_, epoch));
    std::shuffle(order.begin(), order.end(), engine);
    FeatureBatch b;
    for (std::size_t k = index * batch_size_; k < (index + 1) * batch_size_; ++k) {
      b.views.push_back(items_[order[k]]);
      b.labels.push_back(labels_[order[k]]);
      if (two_views) {
        SeededRng view_rng(mix64(mix64(seed_, epoch), order[k]));
        b.second_views.push_back(make_feature_map(items_[order[k]].tokens + random_matrix(1, 8, view_rng, 0.05)));
      }
    }
    return b;
  }

  const std::vector<FeatureMap>& items() const { return items_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<FeatureMap> items_;
  std::vector<int> labels_;
};

double train_auc(const Checkpoint& ckpt, const BlobSource& source) {
  std::vector<double> scores;
  for (const auto& item : source.items()) scores.push_back(predict(ckpt, item));
  return roc_auc(scores, source.labels());
}

}  // namespace

TEST(BceLoss, HandExamples) {
  const std::vector<double> near_one{1.0 - kProbEpsilon};
  const std::vector<int> one{1};
  EXPECT_LE(bce_loss(near_one, one), 1.1e-7);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.5}, one), 0.693147, 1e-6);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.5}, one), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), -std::log(0.9), 1e-15);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 0.105361, 1e-6);
}

TEST(BceLoss, ClampsAndValidates) {
  EXPECT_NEAR(bce_loss(std::vector<double>{1.0}, std::vector<int>{0}), -std::log(kProbEpsilon), 1e-6);
  EXPECT_TRUE(std::isfinite(bce_loss(std::vector<double>{0.0}, std::vector<int>{1})));
  EXPECT_THROW(bce_loss(std::vector<double>{}, std::vector<int>{}), InvalidArgument);
  EXPECT_THROW(bce_loss(std::vector<double>{0.5}, std::vector<int>{1, 0}), InvalidArgument);
}

TEST(BceGradLogit, HandExamples) {
  EXPECT_EQ(bce_grad_logit(1.0, 1), 0.0);
  EXPECT_EQ(bce_grad_logit(0.0, 0), 0.0);
  EXPECT_NEAR(bce_grad_logit(0.7, 1), -0.3, 1e-15);
  EXPECT_NEAR(bce_grad_logit(0.2, 0), 0.2, 1e-15);
}

TEST(DistillLoss, HandExamples) {
  const FeatureMap a = fm({{1, 2}, {3, 4}});
  EXPECT_EQ(distill_loss(a, a), 0.0);
  EXPECT_NEAR(distill_loss(fm({{1, 2}}), fm({{0, 0}})), 5.0, 1e-9);
  EXPECT_NEAR(distill_loss(fm({{3}}), fm({{1}})), 4.0, 1e-9);
  EXPECT_NEAR(distill_loss(fm({{1, 2}}), fm({{0, 0}}), true), 2.5, 1e-12);
  EXPECT_THROW(distill_loss(fm({{1, 2}}), fm({{1}})), InvalidArgument);
}

TEST(DistillLoss, NonNegativeAndZeroOnlyWhenIdentical) {
  SeededRng rng(4);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = random_matrix(3, 5, rng);
    Matrix y = x;
    EXPECT_EQ(distill_loss(x, y), 0.0);
    y(static_cast<Eigen::Index>(rng.below(3)), static_cast<Eigen::Index>(rng.below(5))) += 1e-3;
    EXPECT_GT(distill_loss(x, y), 0.0);
    EXPECT_GE(distill_loss(x, random_matrix(3, 5, rng)), 0.0);
  }
}

TEST(CrdLoss, HandExamples) {
  NegativeQueue empty(8);
  const Vector a = unit({1, 2, 2});
  const Vector p = unit({2, -1, 0.5});
  EXPECT_EQ(crd_loss(a, p, empty, 0.07), 0.0);

  // Reflecting p through the plane orthogonal to a keeps a.q = a.p.
  NegativeQueue one(8);
  const Vector q = unit({0, 1, -1});
  const Vector anchor = unit({1, 0, 0});
  const Vector positive = unit({0.5, 1, 1});
  Vector mirrored = positive;
  mirrored(1) = positive(2);
  mirrored(2) = positive(1);
  one.push(mirrored);
  EXPECT_NEAR(crd_loss(anchor, positive, one, 0.07), std::log(2.0), 1e-12);
  EXPECT_NEAR(crd_loss(anchor, positive, one, 0.07), 0.693147, 1e-6);

  NegativeQueue orth(8);
  orth.push(unit({0, 1, 0}));
  EXPECT_NEAR(crd_loss(unit({1, 0, 0}), unit({1, 0, 0}), orth, 1.0), std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(crd_loss(unit({1, 0, 0}), unit({1, 0, 0}), orth, 1.0), 0.313262, 1e-6);
  (void)q;
}

TEST(CrdLoss, QueueOrderDoesNotMatter) {
  SeededRng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> keys;
    for (int i = 0; i < 30; ++i) keys.push_back(random_vector(6, rng));
    NegativeQueue forward(64), backward(64);
    for (const auto& k : keys) forward.push(k);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) backward.push(*it);
    const Vector a = random_vector(6, rng).normalized();
    const Vector p = random_vector(6, rng).normalized();
    EXPECT_NEAR(crd_loss(a, p, forward, 0.07), crd_loss(a, p, backward, 0.07), 1e-12);
  }
  EXPECT_THROW(crd_loss(Vector(), Vector(), NegativeQueue(1), 0.07), InvalidArgument);
}

TEST(NegativeQueue, FifoCapacityAndUnitEntries) {
  NegativeQueue queue(3);
  SeededRng rng(2);
  std::vector<Vector> pushed;
  for (int i = 0; i < 5; ++i) {
    pushed.push_back(random_vector(4, rng, 3.0));
    queue.push(pushed.back());
    EXPECT_LE(queue.size(), 3u);
  }
  ASSERT_EQ(queue.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(queue.entries()[i].norm(), 1.0, 1e-6);
    EXPECT_LE((queue.entries()[i] - pushed[i + 2].normalized()).norm(), 1e-12);
  }
}

TEST(Momentum, ScheduleEndpointsAndMidpoint) {
  EXPECT_NEAR(momentum(0, 100, 0.99, 0.9999), 0.99, 1e-12);
  EXPECT_NEAR(momentum(100, 100, 0.99, 0.9999), 0.9999, 1e-12);
  EXPECT_NEAR(momentum(50, 100, 0.99, 0.9999), 0.99495, 1e-12);
  EXPECT_THROW(momentum(101, 100, 0.99, 0.9999), InvalidArgument);
  EXPECT_THROW(momentum(0, 0, 0.99, 0.9999), InvalidArgument);
}

TEST(Momentum, MonotoneAndBounded) {
  for (std::size_t total : {1u, 2u, 7u, 1000u}) {
    double previous = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
      const double m = momentum(s, total, 0.99, 0.9999);
      EXPECT_GE(m, 0.99 - 1e-15);
      EXPECT_LE(m, 0.9999 + 1e-15);
      EXPECT_GE(m, previous);
      previous = m;
    }
  }
}

TEST(EmaUpdate, HandExamples) {
  SeededRng rng(3);
  const Matrix t = random_matrix(3, 3, rng);
  const Matrix s = random_matrix(3, 3, rng);
  EXPECT_EQ(ema_update(t, s, 1.0), t);
  EXPECT_EQ(ema_update(t, s, 0.0), s);
  EXPECT_EQ(ema_update(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), 0.5)(0, 0), 1.0);
  EXPECT_THROW(ema_update(t, Matrix::Zero(2, 3), 0.5), InvalidArgument);
  EXPECT_THROW(ema_update(t, s, 1.5), InvalidArgument);
}

TEST(TotalLoss, HandExamples) {
  EXPECT_EQ(total_loss(0.37, 5.0, 9.0, 0.0, 0.0), 0.37);
  EXPECT_NEAR(total_loss(1.0, 2.0, 0.0, 0.5, 0.0), 2.0, 1e-15);
  EXPECT_NEAR(total_loss(1.0, 0.0, 3.0, 0.0, 0.1), 1.3, 1e-15);
}

TEST(Gradients, BceMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const testsupport::GradInstance inst = testsupport::random_grad_instance(seed);
    ObjectiveWeights w;
    EXPECT_LE(testsupport::fd_relative_error(inst, w), 1e-5) << "seed " << seed;
  }
}

TEST(Gradients, DistillMatchesCentralDifferences) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const testsupport::GradInstance inst = testsupport::random_grad_instance(seed);
    for (bool normalize : {false, true}) {
      ObjectiveWeights w;
      w.bce_weight = 0.0;
      w.distill_weight = 1.0;
      w.normalize_distill = normalize;
      EXPECT_LE(testsupport::fd_relative_error(inst, w), 1e-5) << "seed " << seed;
    }
  }
}

TEST(Gradients, CrdMatchesCentralDifferences) {
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const testsupport::GradInstance inst = testsupport::random_grad_instance(seed);
    ObjectiveWeights w;
    w.bce_weight = 0.0;
    w.lambda_crd = 1.0;
    EXPECT_LE(testsupport::fd_relative_error(inst, w), 1e-5) << "seed " << seed;
  }
}

TEST(Gradients, JointObjectiveMatchesCentralDifferences) {
  for (std::uint64_t seed = 300; seed < 330; ++seed) {
    const testsupport::GradInstance inst = testsupport::random_grad_instance(seed);
    ObjectiveWeights w;
    w.lambda_crd = 0.7;
    w.distill_weight = 0.3;
    w.temperature = 0.2;
    EXPECT_LE(testsupport::fd_relative_error(inst, w), 1e-5) << "seed " << seed;
  }
}

TEST(Objective, RejectsMismatchedShapes) {
  testsupport::GradInstance inst = testsupport::random_grad_instance(1);
  const Eigen::Index d = inst.student.projector.rows();
  const Matrix wrong = Matrix::Identity(d + 1, d + 1);
  EXPECT_THROW(objective(inst.student, &wrong, inst.batch, inst.queue, {}), InvalidArgument);
  inst.batch.labels.pop_back();
  EXPECT_THROW(objective(inst.student, nullptr, inst.batch, inst.queue, {}), InvalidArgument);
}

TEST(TrainStage1, SeparableBlobsReachHighAuc) {
  const BlobSource source(512, 32, 7);
  TrainConfig config;
  const StageResult result = train_stage1(config, source);
  EXPECT_EQ(result.log.size(), 2u * 16u);
  EXPECT_EQ(result.checkpoint.step, 32u);
  EXPECT_GE(train_auc(result.checkpoint, source), 0.99);
}

TEST(TrainStage1, ZeroLearningRateKeepsInitialization) {
  const BlobSource source(64, 8, 1);
  TrainConfig config;
  config.learning_rate = 0.0;
  const Checkpoint ckpt = train_stage1(config, source).checkpoint;
  const StudentParams init = initial_student(8);
  EXPECT_EQ(ckpt.head.weights, init.head.weights);
  EXPECT_EQ(ckpt.head.bias, init.head.bias);
  ASSERT_TRUE(ckpt.projector.has_value());
  EXPECT_EQ(*ckpt.projector, init.projector);
}

TEST(TrainStage1, SameSeedBitwiseIdentical) {
  const BlobSource a(128, 16, 3), b(128, 16, 3);
  TrainConfig config;
  config.seed = 3;
  EXPECT_TRUE(bitwise_equal(train_stage1(config, a).checkpoint, train_stage1(config, b).checkpoint));
}

TEST(TrainStage1, EpochAveragedLossNonIncreasing) {
  const BlobSource source(256, 16, 21, 2.0);
  TrainConfig config;
  config.stage1_epochs = 12;
  config.learning_rate = 0.02;
  const StageResult result = train_stage1(config, source);
  const std::size_t per_epoch = source.batches_per_epoch();
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < config.stage1_epochs; ++e) {
    double sum = 0.0;
    for (std::size_t i = 0; i < per_epoch; ++i) sum += result.log[e * per_epoch + i].loss_bce;
    const double mean = sum / static_cast<double>(per_epoch);
    EXPECT_LE(mean, previous) << "epoch " << e;
    previous = mean;
  }
}

TEST(TrainStage2, NoExtraTermsReducesToContinuedStage1) {
  const BlobSource source(128, 16, 5);
  for (TeacherMode mode : {TeacherMode::FrozenCheckpoint, TeacherMode::Momentum}) {
    TrainConfig config;
    config.stage1_epochs = 2;
    config.stage2_epochs = 3;
    config.lambda_crd = 0.0;
    config.distill_weight = 0.0;
    config.teacher_mode = mode;
    const StageResult s1 = train_stage1(config, source);
    const StageResult s2 = train_stage2(config, source, s1.checkpoint);
    TrainConfig longer = config;
    longer.stage1_epochs = 5;
    const StageResult reference = train_stage1(longer, source);
    ASSERT_EQ(s1.log.size() + s2.log.size(), reference.log.size());
    for (std::size_t i = 0; i < s2.log.size(); ++i) {
      const StepLog& ref = reference.log[s1.log.size() + i];
      EXPECT_EQ(s2.log[i].step, ref.step);
      EXPECT_NEAR(s2.log[i].loss_bce, ref.loss_bce, 1e-12);
      EXPECT_NEAR(s2.log[i].loss_total, ref.loss_total, 1e-12);
    }
    EXPECT_LE((s2.checkpoint.head.weights - reference.checkpoint.head.weights).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TrainStage2, StudentEqualTeacherWithZeroRateHasNoDistillation) {
  const BlobSource source(64, 8, 9);
  for (TeacherMode mode : {TeacherMode::FrozenCheckpoint, TeacherMode::Momentum}) {
    TrainConfig config;
    config.teacher_mode = mode;
    const Checkpoint s1 = train_stage1(config, source).checkpoint;
    config.learning_rate = 0.0;
    const StageResult s2 = train_stage2(config, source, s1);
    ASSERT_FALSE(s2.log.empty());
    for (const auto& entry : s2.log) EXPECT_EQ(entry.loss_distill, 0.0);
  }
}

TEST(TrainStage2, MomentumTraceFollowsCosineSchedule) {
  const BlobSource source(96, 8, 13);
  TrainConfig config;
  config.teacher_mode = TeacherMode::Momentum;
  config.stage2_epochs = 3;
  const Checkpoint s1 = train_stage1(config, source).checkpoint;
  const StageResult s2 = train_stage2(config, source, s1);
  const std::size_t steps = s2.log.size();
  ASSERT_EQ(steps, 3u * source.batches_per_epoch());
  double worst = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    ASSERT_TRUE(s2.log[s].momentum.has_value());
    const double expected =
        config.m_max - (config.m_max - config.m_base) * (std::cos(std::numbers::pi * s / (steps - 1.0)) + 1.0) / 2.0;
    worst = std::max(worst, std::abs(*s2.log[s].momentum - expected));
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_NEAR(*s2.log.front().momentum, 0.99, 1e-12);
  EXPECT_NEAR(*s2.log.back().momentum, 0.9999, 1e-12);
}

TEST(TrainStage2, FrozenModeLogsNoMomentumAndStaysAccurate) {
  const BlobSource source(256, 16, 17);
  TrainConfig config;
  config.normalize_distill = true;
  const StageResult s1 = train_stage1(config, source);
  const StageResult s2 = train_stage2(config, source, s1.checkpoint);
  for (const auto& entry : s2.log) EXPECT_FALSE(entry.momentum.has_value());
  EXPECT_EQ(s2.checkpoint.step, s1.checkpoint.step + s2.log.size());
  EXPECT_GE(train_auc(s2.checkpoint, source), 0.99);
}

TEST(TrainStage2, RejectsDimensionMismatch) {
  const BlobSource source(32, 8, 1);
  TrainConfig config;
  Checkpoint wrong = train_stage1(config, source).checkpoint;
  wrong.projector = Matrix::Identity(4, 4);
  wrong.head.weights = Vector::Zero(4);
  EXPECT_THROW(train_stage2(config, source, wrong), InvalidArgument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  SeededRng rng(6);
  Checkpoint ckpt{{random_vector(5, rng), rng.normal()}, random_matrix(5, 5, rng), 123, 0xDEADBEEFu};
  testsupport::TempDir dir("ckpt");
  save_checkpoint(dir / "c.fdck", ckpt);
  EXPECT_TRUE(bitwise_equal(load_checkpoint(dir / "c.fdck"), ckpt));
  Checkpoint bare{{random_vector(3, rng), 0.0}, std::nullopt, 0, 0};
  EXPECT_TRUE(bitwise_equal(decode_checkpoint(encode_checkpoint(bare)), bare));
  EXPECT_EQ(encode_checkpoint(ckpt).substr(0, 4), "FDCK");
}

TEST(Checkpoint, CorruptionIsRejected) {
  SeededRng rng(7);
  const Checkpoint ckpt{{random_vector(4, rng), 0.5}, random_matrix(4, 4, rng), 9, 1};
  const std::string bytes = encode_checkpoint(ckpt);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes + "!"), FormatError);
  std::string bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/c.fdck"), NotFound);
}

TEST(TrainConfig, JsonRoundTripAndStrictness) {
  TrainConfig config;
  config.stage2_epochs = 5;
  config.teacher_mode = TeacherMode::Momentum;
  config.seed = 77;
  const auto back = train_config_from_json(nlohmann::json::parse(to_json(config).dump()));
  EXPECT_EQ(config_hash(back), config_hash(config));
  EXPECT_NE(config_hash(TrainConfig{}), config_hash(config));
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"learning_rat", 0.1}}), InvalidArgument);
  TrainConfig bad;
  bad.m_base = 0.999999;
  EXPECT_THROW(validate(bad), InvalidArgument);
  bad = TrainConfig{};
  bad.temperature = 0.0;
  EXPECT_THROW(validate(bad), InvalidArgument);
}

TEST(TrainingLog, LinesCarryTheDocumentedFields) {
  const auto with = nlohmann::json::parse(log_line({4, 0.5, 0.25, 0.125, 1.0, 0.995}));
  EXPECT_EQ(with["step"], 4);
  EXPECT_EQ(with["loss_bce"], 0.5);
  EXPECT_EQ(with["loss_crd"], 0.25);
  EXPECT_EQ(with["loss_distill"], 0.125);
  EXPECT_EQ(with["momentum"], 0.995);
  const auto without = nlohmann::json::parse(log_line({1, 0.5, 0.0, 0.0, 0.5, std::nullopt}));
  EXPECT_TRUE(without["momentum"].is_null());
}
