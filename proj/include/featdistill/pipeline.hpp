#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "featdistill/config.hpp"
#include "featdistill/ensemble.hpp"
#include "featdistill/metrics.hpp"

namespace featdistill {

/// PNG, or JPEG for .jpg/.jpeg; grayscale is expanded to RGB.
ImageBuffer load_image(const std::filesystem::path& path);
/// Loader resolving manifest paths against `base`.
ImageLoader relative_loader(const std::filesystem::path& base);

/// Training batches drawn from manifest records for one expert. Image
/// experts get freshly augmented views; embedding experts read their rows
/// (augmentation cannot reach precomputed features, so both views agree).
class ManifestBatchSource final : public BatchSource {
 public:
  ManifestBatchSource(std::vector<ManifestRecord> records, ExpertProfile profile,
                      std::shared_ptr<const Extractor> extractor, ImageLoader loader, PipelineMode mode,
                      std::size_t batch_size, std::uint64_t seed,
                      std::map<std::string, double> source_weights, std::size_t jobs);

  std::size_t dim() const override { return extractor_->dim(); }
  std::size_t batches_per_epoch() const override { return per_epoch_; }
  FeatureBatch batch(std::uint64_t epoch, std::size_t index, bool two_views) const override;

 private:
  const std::vector<BatchPlan>& plans(std::uint64_t epoch) const;

  std::vector<ManifestRecord> records_;
  ExpertProfile profile_;
  std::shared_ptr<const Extractor> extractor_;
  ImageLoader loader_;
  PipelineMode mode_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::map<std::string, double> weights_;
  std::size_t jobs_;
  std::size_t per_epoch_ = 0;
  mutable std::optional<std::uint64_t> cached_epoch_;
  mutable std::vector<BatchPlan> cached_plans_;
};

std::uint64_t expert_seed(const RunConfig& config, const ExpertSpec& expert);

/// Unaugmented features of every record, in record order.
std::vector<FeatureMap> clean_features(const std::vector<ManifestRecord>& records, const ExpertProfile& profile,
                                       const Extractor& extractor, const ImageLoader& loader, std::size_t jobs);

struct ExpertTrainResult {
  std::string name;
  StageResult stage1;
  StageResult stage2;
  double stage1_train_auc = 0.0;
  double stage2_train_auc = 0.0;
};

std::filesystem::path stage1_checkpoint_path(const RunConfig& config, const ExpertSpec& expert);
std::filesystem::path stage2_checkpoint_path(const RunConfig& config, const ExpertSpec& expert);
std::filesystem::path training_log_path(const RunConfig& config, const ExpertSpec& expert);

/// Trains every expert (stage 1 then stage 2) on the train split and writes
/// checkpoints, JSONL logs and train_summary.json into output_dir.
std::vector<ExpertTrainResult> run_train(const RunConfig& config, std::size_t jobs);

/// Experts with their stage-2 checkpoints; NotFound names a missing file.
EnsembleConfig load_ensemble(const RunConfig& config);

InferSummary run_infer(const RunConfig& config, const std::filesystem::path& manifest,
                       std::optional<Split> split, const std::filesystem::path& out_csv, std::size_t jobs);

/// Joins predictions with the manifest by item id and writes the report as
/// JSON to `report_path` and as a table next to it (".txt").
RobustReport run_eval(const std::filesystem::path& predictions, const std::filesystem::path& manifest,
                      const std::filesystem::path& report_path);

struct DistortSummary {
  std::size_t written = 0;
  std::vector<std::string> failed;
};

/// Writes `count` degraded copies of every image in in_dir (sorted by name)
/// as <stem>_<k>.png plus specs.jsonl. Seeds depend on (seed, file name, k).
DistortSummary run_distort(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                           PipelineMode mode, std::uint64_t seed, std::size_t count, std::size_t jobs);

struct PrepareSummary {
  std::filesystem::path config_path;
  std::size_t items = 0;
  std::size_t embedding_files = 0;
};

/// Builds the toy corpus described by the config's "toy" block in out_dir:
/// images/, manifest, one FDEB file per embedding expert path and a copy of
/// the config.
PrepareSummary run_prepare(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                           std::size_t jobs);

}  // namespace featdistill
