#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featdistill/dataset.hpp"

namespace featdistill {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// T x D token features with their arithmetic mean over tokens.
struct FeatureMap {
  Matrix tokens;
  Vector pooled;

  std::size_t token_count() const { return static_cast<std::size_t>(tokens.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(tokens.cols()); }
};

/// Builds a map from tokens, computing the pooled mean. Rejects empty or
/// non-finite input.
FeatureMap make_feature_map(Matrix tokens);

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual bool needs_image() const = 0;
  /// Expected tensor side; 0 when the extractor ignores pixels.
  virtual int input_side() const = 0;
  virtual std::size_t token_count() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string descriptor() const = 0;
  /// `tensor` may be null when needs_image() is false.
  virtual FeatureMap extract(const Tensor* tensor, const std::string& item_id) const = 0;
};

inline constexpr int kPatchSide = 16;

/// Random patch embedding: tokens = tanh(W * patch + b) over a grid of
/// non-overlapping 16-pixel patches, W ~ N(0, 1/patch_dim), b ~ N(0, 0.1^2).
class SyntheticExtractor final : public Extractor {
 public:
  SyntheticExtractor(std::uint64_t seed, int input_side, std::size_t dim);

  bool needs_image() const override { return true; }
  int input_side() const override { return side_; }
  std::size_t token_count() const override { return tokens_; }
  std::size_t dim() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::string descriptor() const override;
  FeatureMap extract(const Tensor* tensor, const std::string& item_id) const override;

  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }

 private:
  std::uint64_t seed_;
  int side_;
  std::size_t tokens_;
  Matrix weights_;
  Vector bias_;
};

/// In-memory contents of an FDEB file: item id -> T*D float32 values.
struct EmbeddingTable {
  std::uint32_t tokens = 0;
  std::uint32_t dim = 0;
  std::map<std::string, std::vector<float>> rows;

  bool operator==(const EmbeddingTable&) const = default;
};

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
std::string encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(const std::string& bytes);

class EmbeddingExtractor final : public Extractor {
 public:
  EmbeddingExtractor(EmbeddingTable table, std::string descriptor);
  static std::shared_ptr<EmbeddingExtractor> open(const std::filesystem::path& path);

  bool needs_image() const override { return false; }
  int input_side() const override { return 0; }
  std::size_t token_count() const override { return table_.tokens; }
  std::size_t dim() const override { return table_.dim; }
  std::string descriptor() const override { return descriptor_; }
  FeatureMap extract(const Tensor* tensor, const std::string& item_id) const override;

 private:
  EmbeddingTable table_;
  std::string descriptor_;
};

struct ExtractorRef {
  enum class Type { Synthetic, EmbeddingFile };
  Type type = Type::Synthetic;
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  std::filesystem::path path;
};

std::shared_ptr<const Extractor> make_extractor(const ExtractorRef& ref, int input_side);

struct ClassifierHead {
  Vector weights;
  double bias = 0.0;
};

double sigmoid(double z);

/// sigma(w . pooled + b).
double head_forward(const ClassifierHead& head, const Vector& pooled);

}  // namespace featdistill
