#include "featdistill/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "featdistill/errors.hpp"

namespace featdistill {

TeacherMode parse_teacher_mode(std::string_view text) {
  if (text == "frozen") return TeacherMode::FrozenCheckpoint;
  if (text == "momentum") return TeacherMode::Momentum;
  throw InvalidArgument("unknown teacher_mode '" + std::string(text) + "' (expected frozen or momentum)");
}

std::string_view teacher_mode_name(TeacherMode mode) {
  return mode == TeacherMode::Momentum ? "momentum" : "frozen";
}

void validate(const TrainConfig& c) {
  auto finite_nonneg = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument(std::string(name) + " must be finite and >= 0");
  };
  finite_nonneg(c.learning_rate, "learning_rate");
  finite_nonneg(c.lambda_crd, "lambda_crd");
  finite_nonneg(c.distill_weight, "distill_weight");
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) throw InvalidArgument("temperature must be > 0");
  if (!(c.m_base >= 0.0 && c.m_base <= c.m_max && c.m_max <= 1.0)) {
    throw InvalidArgument("momentum bounds must satisfy 0 <= m_base <= m_max <= 1");
  }
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["stage1_epochs"] = c.stage1_epochs;
  j["stage2_epochs"] = c.stage2_epochs;
  j["learning_rate"] = c.learning_rate;
  j["lambda_crd"] = c.lambda_crd;
  j["distill_weight"] = c.distill_weight;
  j["teacher_mode"] = std::string(teacher_mode_name(c.teacher_mode));
  j["m_base"] = c.m_base;
  j["m_max"] = c.m_max;
  j["temperature"] = c.temperature;
  j["queue_capacity"] = c.queue_capacity;
  j["normalize_distill"] = c.normalize_distill;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("train config must be an object");
  TrainConfig c;
  auto count = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw InvalidArgument("train." + key + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  };
  auto real = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw InvalidArgument("train." + key + " must be a number");
    return v.get<double>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "stage1_epochs") c.stage1_epochs = count(v, key);
    else if (key == "stage2_epochs") c.stage2_epochs = count(v, key);
    else if (key == "learning_rate") c.learning_rate = real(v, key);
    else if (key == "lambda_crd") c.lambda_crd = real(v, key);
    else if (key == "distill_weight") c.distill_weight = real(v, key);
    else if (key == "teacher_mode") {
      if (!v.is_string()) throw InvalidArgument("train.teacher_mode must be a string");
      c.teacher_mode = parse_teacher_mode(v.get<std::string>());
    } else if (key == "m_base") c.m_base = real(v, key);
    else if (key == "m_max") c.m_max = real(v, key);
    else if (key == "temperature") c.temperature = real(v, key);
    else if (key == "queue_capacity") c.queue_capacity = count(v, key);
    else if (key == "normalize_distill") {
      if (!v.is_boolean()) throw InvalidArgument("train.normalize_distill must be a boolean");
      c.normalize_distill = v.get<bool>();
    } else if (key == "seed") c.seed = count(v, key);
    else throw InvalidArgument("unknown key 'train." + key + "'");
  }
  validate(c);
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a64(to_json(config).dump()); }

namespace {

constexpr char kCkptMagic[4] = {'F', 'D', 'C', 'K'};
constexpr std::uint16_t kCkptVersion = 1;

template <class T>
void put(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw FormatError("checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto dim = ckpt.head.weights.size();
  if (ckpt.projector && (ckpt.projector->rows() != dim || ckpt.projector->cols() != dim)) {
    throw InvalidArgument("checkpoint projector must be D x D");
  }
  std::string out(kCkptMagic, 4);
  put(out, kCkptVersion);
  put(out, static_cast<std::uint32_t>(dim));
  put(out, static_cast<std::uint8_t>(ckpt.projector ? 1 : 0));
  put(out, ckpt.step);
  put(out, ckpt.config_hash);
  put(out, ckpt.head.bias);
  for (Eigen::Index i = 0; i < dim; ++i) put(out, ckpt.head.weights(i));
  if (ckpt.projector) {
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) put(out, (*ckpt.projector)(r, c));
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCkptMagic, 4) != 0) {
    throw FormatError("not an FDCK checkpoint");
  }
  std::size_t pos = 4;
  const auto version = get<std::uint16_t>(bytes, pos);
  if (version != kCkptVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto dim = static_cast<Eigen::Index>(get<std::uint32_t>(bytes, pos));
  const auto has_projector = get<std::uint8_t>(bytes, pos);
  if (has_projector > 1) throw FormatError("bad projector flag in checkpoint");
  Checkpoint ckpt;
  ckpt.step = get<std::uint64_t>(bytes, pos);
  ckpt.config_hash = get<std::uint64_t>(bytes, pos);
  ckpt.head.bias = get<double>(bytes, pos);
  const std::size_t need = static_cast<std::size_t>(dim) * 8 * (1 + (has_projector ? dim : 0));
  if (bytes.size() - pos != need) throw FormatError("checkpoint size does not match its header");
  ckpt.head.weights.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) ckpt.head.weights(i) = get<double>(bytes, pos);
  if (has_projector) {
    Matrix p(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) p(r, c) = get<double>(bytes, pos);
    }
    ckpt.projector = std::move(p);
  }
  if (!std::isfinite(ckpt.head.bias) || !ckpt.head.weights.allFinite() ||
      (ckpt.projector && !ckpt.projector->allFinite())) {
    throw FormatError("checkpoint contains non-finite parameters");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("checkpoint not found: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  return encode_checkpoint(a) == encode_checkpoint(b);
}

Vector head_input(const Checkpoint& ckpt, const Vector& pooled) {
  if (!ckpt.projector) return pooled;
  if (ckpt.projector->cols() != pooled.size()) throw InvalidArgument("projector does not match feature dim");
  return *ckpt.projector * pooled;
}

double predict(const Checkpoint& ckpt, const FeatureMap& features) {
  return head_forward(ckpt.head, head_input(ckpt, features.pooled));
}

void NegativeQueue::push(const Vector& key) {
  if (capacity_ == 0) return;
  const double norm = key.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("queue key must be nonzero and finite");
  if (!entries_.empty() && entries_.front().size() != key.size()) {
    throw InvalidArgument("queue key dim mismatch");
  }
  entries_.push_back(key / norm);
  if (entries_.size() > capacity_) entries_.pop_front();
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.empty()) throw InvalidArgument("bce_loss needs at least one item");
  if (probs.size() != labels.size()) throw InvalidArgument("bce_loss length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbEpsilon, 1.0 - kProbEpsilon);
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    sum += labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(probs.size());
}

double bce_grad_logit(double prob, int label) { return prob - static_cast<double>(label); }

double distill_loss(const Matrix& current, const Matrix& fixed, bool normalize) {
  if (current.rows() != fixed.rows() || current.cols() != fixed.cols()) {
    throw InvalidArgument("distill_loss shape mismatch");
  }
  const double sum = (current - fixed).squaredNorm();
  return normalize && current.size() > 0 ? sum / static_cast<double>(current.size()) : sum;
}

double distill_loss(const FeatureMap& current, const FeatureMap& fixed, bool normalize) {
  return distill_loss(current.tokens, fixed.tokens, normalize);
}

namespace {

void check_crd_inputs(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                      double temperature) {
  if (anchor.size() == 0) throw InvalidArgument("crd anchor is empty");
  if (positive.size() != anchor.size()) throw InvalidArgument("crd anchor/positive dim mismatch");
  if (!queue.entries().empty() && queue.entries().front().size() != anchor.size()) {
    throw InvalidArgument("crd queue dim mismatch");
  }
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
}

// Logits with the positive first.
std::vector<double> crd_logits(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                               double temperature) {
  std::vector<double> logits;
  logits.reserve(queue.size() + 1);
  logits.push_back(anchor.dot(positive) / temperature);
  for (const auto& q : queue.entries()) logits.push_back(anchor.dot(q) / temperature);
  return logits;
}

}  // namespace

double crd_loss(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                double temperature) {
  check_crd_inputs(anchor, positive, queue, temperature);
  const auto logits = crd_logits(anchor, positive, queue, temperature);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  return top + std::log(sum) - logits[0];
}

Vector crd_grad_anchor(const Vector& anchor, const Vector& positive, const NegativeQueue& queue,
                       double temperature) {
  check_crd_inputs(anchor, positive, queue, temperature);
  const auto logits = crd_logits(anchor, positive, queue, temperature);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  Vector grad = (std::exp(logits[0] - top) / sum - 1.0) * positive;
  std::size_t i = 1;
  for (const auto& q : queue.entries()) grad += (std::exp(logits[i++] - top) / sum) * q;
  return grad / temperature;
}

double momentum(std::size_t step_global, std::size_t step_total, double m_base, double m_max) {
  if (step_total < 1) throw InvalidArgument("momentum step_total must be >= 1");
  if (step_global > step_total) throw InvalidArgument("momentum step_global exceeds step_total");
  const double ratio = static_cast<double>(step_global) / static_cast<double>(step_total);
  return m_max - (m_max - m_base) * (std::cos(std::numbers::pi * ratio) + 1.0) / 2.0;
}

Matrix ema_update(const Matrix& teacher, const Matrix& student, double m) {
  if (teacher.rows() != student.rows() || teacher.cols() != student.cols()) {
    throw InvalidArgument("ema_update shape mismatch");
  }
  if (!(m >= 0.0 && m <= 1.0)) throw InvalidArgument("momentum must lie in [0, 1]");
  // lerp keeps t' == t exactly when student == teacher.
  return student.binaryExpr(teacher, [m](double s, double t) { return std::lerp(s, t, m); });
}

double total_loss(double bce, double crd, double distill, double lambda_crd, double distill_weight) {
  return bce + lambda_crd * crd + distill_weight * distill;
}

StudentParams initial_student(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Matrix::Identity(d, d), ClassifierHead{Vector::Zero(d), 0.0}};
}

ObjectiveTerms objective(const StudentParams& student, const Matrix* teacher, const FeatureBatch& batch,
                         const NegativeQueue& queue, const ObjectiveWeights& weights, Gradients* grads) {
  const std::size_t n = batch.views.size();
  if (n == 0) throw InvalidArgument("objective needs a nonempty batch");
  if (batch.labels.size() != n) throw InvalidArgument("batch labels/views length mismatch");
  if (!batch.second_views.empty() && batch.second_views.size() != n) {
    throw InvalidArgument("batch second_views length mismatch");
  }
  const Matrix& p = student.projector;
  const Eigen::Index d = p.rows();
  if (p.cols() != d || student.head.weights.size() != d) throw InvalidArgument("student parameter shapes disagree");
  if (teacher && (teacher->rows() != d || teacher->cols() != d)) {
    throw InvalidArgument("teacher/student dimension mismatch");
  }
  if (grads) {
    grads->projector = Matrix::Zero(d, d);
    grads->weights = Vector::Zero(d);
    grads->bias = 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ObjectiveTerms terms;
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureMap& view = batch.views[i];
    if (static_cast<Eigen::Index>(view.dim()) != d) throw InvalidArgument("feature dim does not match student");
    const Vector u = p * view.pooled;
    probs[i] = sigmoid(student.head.weights.dot(u) + student.head.bias);
    if (grads) {
      const double dz = weights.bce_weight * bce_grad_logit(probs[i], batch.labels[i]) * inv_n;
      grads->weights += dz * u;
      grads->bias += dz;
      grads->projector += (dz * student.head.weights) * view.pooled.transpose();
    }
    if (!teacher) continue;

    const Matrix residual = view.tokens * (p - *teacher).transpose();
    const double scale = weights.normalize_distill ? 1.0 / static_cast<double>(residual.size()) : 1.0;
    terms.distill += scale * residual.squaredNorm() * inv_n;
    if (grads && weights.distill_weight != 0.0) {
      grads->projector += (2.0 * scale * inv_n * weights.distill_weight) * residual.transpose() * view.tokens;
    }

    const FeatureMap& second = batch.second_views.empty() ? view : batch.second_views[i];
    const Vector key = *teacher * second.pooled;
    const double key_norm = key.norm();
    const double u_norm = u.norm();
    if (!(key_norm > 0.0) || !(u_norm > 0.0)) throw InvalidArgument("zero projection in contrastive term");
    const Vector anchor = u / u_norm;
    const Vector positive = key / key_norm;
    terms.crd += crd_loss(anchor, positive, queue, weights.temperature) * inv_n;
    if (grads && weights.lambda_crd != 0.0) {
      const Vector ga = crd_grad_anchor(anchor, positive, queue, weights.temperature);
      const Vector gu = (ga - anchor * anchor.dot(ga)) / u_norm;
      grads->projector += (weights.lambda_crd * inv_n) * gu * view.pooled.transpose();
    }
  }
  terms.bce = bce_loss(probs, batch.labels);
  terms.total = weights.bce_weight * terms.bce + weights.lambda_crd * terms.crd +
                weights.distill_weight * terms.distill;
  return terms;
}

std::string log_line(const StepLog& entry) {
  nlohmann::ordered_json j;
  j["step"] = entry.step;
  j["loss_bce"] = entry.loss_bce;
  j["loss_crd"] = entry.loss_crd;
  j["loss_distill"] = entry.loss_distill;
  j["momentum"] = entry.momentum ? nlohmann::ordered_json(*entry.momentum) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

void write_training_log(const std::filesystem::path& path, const std::vector<StepLog>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write training log " + path.string());
  for (const auto& entry : log) out << log_line(entry) << '\n';
}

namespace {

void sgd_step(StudentParams& student, const Gradients& g, double lr) {
  student.projector -= lr * g.projector;
  student.head.weights -= lr * g.weights;
  student.head.bias -= lr * g.bias;
}

Checkpoint to_checkpoint(const StudentParams& student, std::uint64_t step, const TrainConfig& config) {
  return Checkpoint{student.head, student.projector, step, config_hash(config)};
}

}  // namespace

StageResult train_stage1(const TrainConfig& config, const BatchSource& source) {
  validate(config);
  const std::size_t per_epoch = source.batches_per_epoch();
  if (per_epoch == 0) throw InvalidArgument("training needs at least one batch");
  StudentParams student = initial_student(source.dim());
  const NegativeQueue no_negatives(0);
  const ObjectiveWeights weights{1.0, 0.0, 0.0, config.temperature, config.normalize_distill};
  StageResult result;
  std::uint64_t step = 0;
  Gradients g;
  for (std::size_t epoch = 0; epoch < config.stage1_epochs; ++epoch) {
    for (std::size_t i = 0; i < per_epoch; ++i, ++step) {
      const FeatureBatch batch = source.batch(epoch, i, false);
      const ObjectiveTerms terms = objective(student, nullptr, batch, no_negatives, weights, &g);
      sgd_step(student, g, config.learning_rate);
      result.log.push_back({step, terms.bce, 0.0, 0.0, terms.total, std::nullopt});
    }
  }
  result.checkpoint = to_checkpoint(student, step, config);
  return result;
}

StageResult train_stage2(const TrainConfig& config, const BatchSource& source, const Checkpoint& stage1) {
  validate(config);
  const std::size_t per_epoch = source.batches_per_epoch();
  if (per_epoch == 0) throw InvalidArgument("training needs at least one batch");
  const auto d = static_cast<Eigen::Index>(source.dim());
  if (!stage1.projector || stage1.projector->rows() != d || stage1.projector->cols() != d ||
      stage1.head.weights.size() != d) {
    throw InvalidArgument("stage-1 checkpoint does not match the student feature dim");
  }
  StudentParams student{*stage1.projector, stage1.head};
  Matrix teacher = *stage1.projector;
  NegativeQueue queue(config.queue_capacity);
  const ObjectiveWeights weights{1.0, config.lambda_crd, config.distill_weight, config.temperature,
                                 config.normalize_distill};
  const std::size_t total_steps = config.stage2_epochs * per_epoch;
  const std::size_t step_total = std::max<std::size_t>(total_steps > 0 ? total_steps - 1 : 0, 1);
  StageResult result;
  Gradients g;
  std::size_t s = 0;
  for (std::size_t e = 0; e < config.stage2_epochs; ++e) {
    const std::uint64_t epoch = config.stage1_epochs + e;
    for (std::size_t i = 0; i < per_epoch; ++i, ++s) {
      const FeatureBatch batch = source.batch(epoch, i, true);
      const ObjectiveTerms terms = objective(student, &teacher, batch, queue, weights, &g);
      std::vector<Vector> keys;
      keys.reserve(batch.views.size());
      for (std::size_t k = 0; k < batch.views.size(); ++k) {
        const FeatureMap& second = batch.second_views.empty() ? batch.views[k] : batch.second_views[k];
        keys.push_back(teacher * second.pooled);
      }
      sgd_step(student, g, config.learning_rate);
      std::optional<double> m;
      if (config.teacher_mode == TeacherMode::Momentum) {
        m = momentum(s, step_total, config.m_base, config.m_max);
        teacher = ema_update(teacher, student.projector, *m);
      }
      for (const auto& key : keys) queue.push(key);
      result.log.push_back({stage1.step + s, terms.bce, terms.crd, terms.distill, terms.total, m});
    }
  }
  result.checkpoint = to_checkpoint(student, stage1.step + s, config);
  return result;
}

}  // namespace featdistill
