#include "featdistill/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "featdistill/errors.hpp"
#include "featdistill/rng.hpp"

namespace featdistill {

FeatureMap make_feature_map(Matrix tokens) {
  if (tokens.rows() == 0 || tokens.cols() == 0) throw InvalidArgument("feature map must be nonempty");
  if (!tokens.allFinite()) throw InvalidArgument("feature map values must be finite");
  FeatureMap map;
  map.pooled = tokens.colwise().mean().transpose();
  map.tokens = std::move(tokens);
  return map;
}

SyntheticExtractor::SyntheticExtractor(std::uint64_t seed, int input_side, std::size_t dim)
    : seed_(seed), side_(input_side) {
  if (input_side <= 0 || input_side % kPatchSide != 0) {
    throw InvalidArgument("synthetic extractor input side must be a positive multiple of 16");
  }
  if (dim == 0) throw InvalidArgument("synthetic extractor dim must be > 0");
  const std::size_t grid = static_cast<std::size_t>(input_side / kPatchSide);
  tokens_ = grid * grid;
  const Eigen::Index patch_dim = kPatchSide * kPatchSide * 3;
  const double sd = 1.0 / std::sqrt(static_cast<double>(patch_dim));
  SeededRng rng(seed);
  weights_.resize(static_cast<Eigen::Index>(dim), patch_dim);
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < patch_dim; ++c) weights_(r, c) = rng.normal(0.0, sd);
  }
  bias_.resize(static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < bias_.size(); ++r) bias_(r) = rng.normal(0.0, 0.1);
}

std::string SyntheticExtractor::descriptor() const {
  return "synthetic(seed=" + std::to_string(seed_) + ",side=" + std::to_string(side_) +
         ",T=" + std::to_string(tokens_) + ",D=" + std::to_string(dim()) + ")";
}

FeatureMap SyntheticExtractor::extract(const Tensor* tensor, const std::string&) const {
  if (tensor == nullptr) throw InvalidArgument("synthetic extractor needs an input tensor");
  if (tensor->side != side_) {
    throw InvalidArgument("tensor side " + std::to_string(tensor->side) + " does not match extractor side " +
                          std::to_string(side_));
  }
  const int grid = side_ / kPatchSide;
  Matrix tokens(static_cast<Eigen::Index>(tokens_), weights_.rows());
  Vector patch(weights_.cols());
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      Eigen::Index k = 0;
      for (int y = 0; y < kPatchSide; ++y) {
        for (int x = 0; x < kPatchSide; ++x) {
          for (int c = 0; c < 3; ++c) patch(k++) = tensor->at(gx * kPatchSide + x, gy * kPatchSide + y, c);
        }
      }
      tokens.row(gy * grid + gx) = (weights_ * patch + bias_).array().tanh().transpose();
    }
  }
  return make_feature_map(std::move(tokens));
}

namespace {

constexpr char kMagic[4] = {'F', 'D', 'E', 'B'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }

  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("embedding file truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_embeddings(const EmbeddingTable& table) {
  const std::size_t row_size = static_cast<std::size_t>(table.tokens) * table.dim;
  std::string out(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, table.tokens);
  put(out, table.dim);
  put(out, static_cast<std::uint64_t>(table.rows.size()));
  for (const auto& [id, values] : table.rows) {
    if (id.size() > 0xFFFF) throw InvalidArgument("item id too long for embedding file");
    if (values.size() != row_size) {
      throw InvalidArgument("embedding row '" + id + "' has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(row_size));
    }
    put(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (float v : values) put(out, v);
  }
  return out;
}

EmbeddingTable decode_embeddings(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(4), kMagic, 4) != 0) throw FormatError("not an FDEB embedding file");
  const auto version = in.get<std::uint16_t>();
  if (version != kVersion) throw FormatError("unsupported FDEB version " + std::to_string(version));
  EmbeddingTable table;
  table.tokens = in.get<std::uint32_t>();
  table.dim = in.get<std::uint32_t>();
  const auto count = in.get<std::uint64_t>();
  const std::size_t row_size = static_cast<std::size_t>(table.tokens) * table.dim;
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = in.get<std::uint16_t>();
    std::string id(in.take(len), len);
    std::vector<float> values(row_size);
    if (row_size > 0) std::memcpy(values.data(), in.take(row_size * sizeof(float)), row_size * sizeof(float));
    if (!table.rows.emplace(std::move(id), std::move(values)).second) {
      throw FormatError("duplicate item id in embedding file");
    }
  }
  if (!in.done()) throw FormatError("trailing bytes after embedding rows");
  return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  const std::string bytes = encode_embeddings(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write embedding file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open embedding file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_embeddings(buffer.str());
}

EmbeddingExtractor::EmbeddingExtractor(EmbeddingTable table, std::string descriptor)
    : table_(std::move(table)), descriptor_(std::move(descriptor)) {
  if (table_.tokens == 0 || table_.dim == 0) throw InvalidArgument("embedding table has zero T or D");
}

std::shared_ptr<EmbeddingExtractor> EmbeddingExtractor::open(const std::filesystem::path& path) {
  return std::make_shared<EmbeddingExtractor>(load_embeddings(path), "embedding(" + path.string() + ")");
}

FeatureMap EmbeddingExtractor::extract(const Tensor*, const std::string& item_id) const {
  const auto it = table_.rows.find(item_id);
  if (it == table_.rows.end()) throw NotFound("item '" + item_id + "' not in " + descriptor_);
  Matrix tokens(table_.tokens, table_.dim);
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    for (Eigen::Index d = 0; d < tokens.cols(); ++d) {
      tokens(t, d) = it->second[static_cast<std::size_t>(t * tokens.cols() + d)];
    }
  }
  return make_feature_map(std::move(tokens));
}

std::shared_ptr<const Extractor> make_extractor(const ExtractorRef& ref, int input_side) {
  switch (ref.type) {
    case ExtractorRef::Type::Synthetic:
      return std::make_shared<SyntheticExtractor>(ref.seed, input_side, ref.dim);
    case ExtractorRef::Type::EmbeddingFile:
      return EmbeddingExtractor::open(ref.path);
  }
  throw InvalidArgument("unknown extractor type");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double head_forward(const ClassifierHead& head, const Vector& pooled) {
  if (head.weights.size() != pooled.size()) {
    throw InvalidArgument("head dim " + std::to_string(head.weights.size()) + " does not match features dim " +
                          std::to_string(pooled.size()));
  }
  return sigmoid(head.weights.dot(pooled) + head.bias);
}

}  // namespace featdistill
