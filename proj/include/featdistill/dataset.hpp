#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "featdistill/distortion.hpp"
#include "featdistill/image.hpp"
#include "featdistill/rng.hpp"

namespace featdistill {

enum class Split { Train, Val, HardVal, Test };

Split parse_split(std::string_view text);
std::string_view split_name(Split split);

/// One dataset item. `path` doubles as the item id everywhere downstream.
struct ManifestRecord {
  std::string path;
  int label = 0;  // 0 = real, 1 = AI-generated
  std::string source;
  Split split = Split::Train;
  std::optional<DistortionSpec> distortion;

  bool operator==(const ManifestRecord&) const = default;
};

/// Strict JSONL reader: fields exactly {path,label,source,split,distortion?}.
/// Blank lines are skipped; errors carry the 1-based line number.
std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(std::string_view text);
void save_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);
std::string manifest_line(const ManifestRecord& record);

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records, Split split);

enum class ExpertKind { ClipL14, SigLip400M, SyntheticA, SyntheticB };

ExpertKind parse_expert_kind(std::string_view text);
std::string_view expert_kind_name(ExpertKind kind);

/// Resize/crop/normalize profile of one expert.
struct ExpertProfile {
  ExpertKind kind = ExpertKind::SyntheticA;
  int input_side = 32;
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> std{0.5, 0.5, 0.5};
};

/// Published constants for the real families (CLIP: 224, OpenAI mean/std;
/// SigLIP: 384, 0.5/0.5); synthetic kinds default to 32 and 48 pixels.
ExpertProfile default_profile(ExpertKind kind);

/// side x side x 3 normalized input, HWC order.
struct Tensor {
  int side = 0;
  std::vector<float> values;

  float at(int x, int y, int c) const {
    return values[(static_cast<std::size_t>(y) * side + x) * 3 + c];
  }
};

/// Resize shorter side to input_side (bilinear), center-crop, then
/// (v - mean_c) / std_c. Requires 3 channels.
Tensor preprocess(const ImageBuffer& img, const ExpertProfile& profile);

/// Draws sample_spec(rng, mode) and applies it when present.
std::pair<ImageBuffer, std::optional<DistortionSpec>> augment(const ImageBuffer& img,
                                                              PipelineMode mode, SeededRng& rng);

/// Indices into the record list forming one class-balanced batch.
struct BatchPlan {
  std::vector<std::size_t> items;
};

/// Class-balanced epoch plan: batch_size/2 items per class in every batch.
/// The larger class is visited without replacement; the smaller class is
/// oversampled by concatenating fresh shuffles. `source_weights` scales how
/// often records of a source enter the class pool (default weight 1): floor(w)
/// copies plus one more with probability frac(w), drawn once per seed so the
/// pool is the same in every epoch.
std::vector<BatchPlan> balanced_batches(const std::vector<ManifestRecord>& records,
                                        std::size_t batch_size, std::uint64_t seed,
                                        std::uint64_t epoch = 0,
                                        const std::map<std::string, double>& source_weights = {});

struct Batch {
  std::vector<Tensor> tensors;
  std::vector<int> labels;
  std::vector<std::string> item_ids;
  std::vector<std::optional<DistortionSpec>> applied_specs;
};

using ImageLoader = std::function<ImageBuffer(const std::string& item_path)>;

/// Seed for one augmentation draw: independent of batch layout and worker
/// scheduling.
std::uint64_t item_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t slot,
                        std::uint64_t view = 0);

/// Loads, augments and preprocesses every planned item. Items are produced
/// in plan order whatever the worker count.
Batch materialize_batch(const BatchPlan& plan, const std::vector<ManifestRecord>& records,
                        const ImageLoader& loader, const ExpertProfile& profile,
                        PipelineMode mode, std::uint64_t seed, std::uint64_t epoch,
                        std::uint64_t first_slot, std::uint64_t view = 0,
                        std::size_t jobs = 1);

}  // namespace featdistill
