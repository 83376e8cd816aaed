#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdistill/features.hpp"

namespace featdistill {

enum class TeacherMode { FrozenCheckpoint, Momentum };

TeacherMode parse_teacher_mode(std::string_view text);
std::string_view teacher_mode_name(TeacherMode mode);

struct TrainConfig {
  std::size_t stage1_epochs = 2;
  std::size_t stage2_epochs = 2;
  double learning_rate = 0.1;
  double lambda_crd = 1.0;
  double distill_weight = 1.0;
  TeacherMode teacher_mode = TeacherMode::FrozenCheckpoint;
  double m_base = 0.99;
  double m_max = 0.9999;
  double temperature = 0.07;
  std::size_t queue_capacity = 4096;
  // Divide the distillation term by T*D.
  bool normalize_distill = false;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);
nlohmann::ordered_json to_json(const TrainConfig& config);
/// Strict: unknown keys are rejected; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
/// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const TrainConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

struct Checkpoint {
  ClassifierHead head;
  std::optional<Matrix> projector;
  std::uint64_t step = 0;
  std::uint64_t config_hash = 0;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
bool bitwise_equal(const Checkpoint& a, const Checkpoint& b);

/// Head input for a feature map: the projected pooled vector P * pooled,
/// or pooled itself without a projector.
Vector head_input(const Checkpoint& ckpt, const Vector& pooled);
double predict(const Checkpoint& ckpt, const FeatureMap& features);

/// FIFO of unit vectors; the oldest entries fall out past capacity.
class NegativeQueue {
 public:
  explicit NegativeQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Stores key / |key|.
  void push(const Vector& key);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Vector>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Vector> entries_;
};

inline constexpr double kProbEpsilon = 1e-7;

double bce_loss(std::span<const double> probs, std::span<const int> labels);
double bce_grad_logit(double prob, int label);

/// Squared Frobenius distance; divided by T*D when `normalize` is set.
double distill_loss(const FeatureMap& current, const FeatureMap& fixed, bool normalize = false);
double distill_loss(const Matrix& current, const Matrix& fixed, bool normalize = false);

/// InfoNCE with the positive as class 0 and every queue entry as a negative.
double crd_loss(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                double temperature);
/// Gradient of crd_loss with respect to the (already normalized) anchor.
Vector crd_grad_anchor(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                       double temperature);

double momentum(std::size_t step_global, std::size_t step_total, double m_base, double m_max);
Matrix ema_update(const Matrix& teacher, const Matrix& student, double m);
double total_loss(double bce, double crd, double distill, double lambda_crd, double distill_weight);

struct StudentParams {
  Matrix projector;
  ClassifierHead head;
};

StudentParams initial_student(std::size_t dim);

struct FeatureBatch {
  std::vector<FeatureMap> views;
  // Second augmented view of each item; empty means "same as views".
  std::vector<FeatureMap> second_views;
  std::vector<int> labels;
};

struct ObjectiveWeights {
  double bce_weight = 1.0;
  double lambda_crd = 0.0;
  double distill_weight = 0.0;
  double temperature = 0.07;
  bool normalize_distill = false;
};

struct ObjectiveTerms {
  double bce = 0.0;
  double crd = 0.0;
  double distill = 0.0;
  double total = 0.0;
};

struct Gradients {
  Matrix projector;
  Vector weights;
  double bias = 0.0;
};

/// Batch-averaged objective. Without a teacher only the BCE term exists.
/// With a teacher, CRD anchors are the normalized student projections of
/// the first view and positives the normalized teacher projections of the
/// second view; distillation compares X P^T with X P_t^T on the first view.
ObjectiveTerms objective(const StudentParams& student, const Matrix* teacher,
                         const FeatureBatch& batch, const NegativeQueue& queue,
                         const ObjectiveWeights& weights, Gradients* grads = nullptr);

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t batches_per_epoch() const = 0;
  /// Must be a pure function of (epoch, index); the first view may not
  /// depend on `two_views`.
  virtual FeatureBatch batch(std::uint64_t epoch, std::size_t index, bool two_views) const = 0;
};

struct StepLog {
  std::uint64_t step = 0;
  double loss_bce = 0.0;
  double loss_crd = 0.0;
  double loss_distill = 0.0;
  double loss_total = 0.0;
  std::optional<double> momentum;
};

std::string log_line(const StepLog& entry);
void write_training_log(const std::filesystem::path& path, const std::vector<StepLog>& log);

struct StageResult {
  Checkpoint checkpoint;
  std::vector<StepLog> log;
};

/// SGD on BCE for stage1_epochs epochs (epochs 0..E1-1), starting from
/// initial_student.
StageResult train_stage1(const TrainConfig& config, const BatchSource& source);

/// Continues from the stage-1 checkpoint for stage2_epochs epochs, numbered
/// after the stage-1 epochs. In Momentum mode the teacher projector tracks
/// the student with momentum(s, S - 1) after each of the S steps.
StageResult train_stage2(const TrainConfig& config, const BatchSource& source,
                         const Checkpoint& stage1);

}  // namespace featdistill
