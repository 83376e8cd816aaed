#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featdistill/dataset.hpp"
#include "featdistill/features.hpp"
#include "featdistill/trainer.hpp"

namespace featdistill {

/// One (preprocessing, extractor, head) triple.
struct Expert {
  std::string name;
  ExpertProfile profile;
  std::shared_ptr<const Extractor> extractor;
  Checkpoint checkpoint;
};

struct EnsembleConfig {
  std::vector<Expert> experts;
};

/// Checks K >= 1 and that every checkpoint matches its extractor's dim.
void validate(const EnsembleConfig& config);

struct Prediction {
  std::string item_id;
  std::vector<double> per_expert;
  double p_final = 0.0;
  std::optional<double> latency_ms;
};

/// Arithmetic mean of the expert probabilities; exactly the common value
/// when all experts agree.
double soft_vote(std::span<const double> probs);

/// `img` may be null for experts whose extractor ignores pixels.
double predict_expert(const Expert& expert, const ImageBuffer* img, const std::string& item_id);
Prediction ensemble_predict(const EnsembleConfig& config, const ImageBuffer* img, const std::string& item_id);

bool needs_images(const EnsembleConfig& config);

struct InferSummary {
  std::vector<Prediction> predictions;  // manifest order, failed items left out
  std::vector<std::string> failed;      // "item_id: reason"
};

/// Predicts every record. A record's distortion, if any, is applied to the
/// loaded image first. Items whose image cannot be read or processed are
/// skipped with a logged reason. Output order does not depend on `jobs`.
InferSummary infer_records(const EnsembleConfig& config, const std::vector<ManifestRecord>& records,
                           const ImageLoader& loader, std::size_t jobs = 1);

/// Header `item_id,p_final,p_1..p_K`, probabilities with 6 decimals.
std::string predictions_csv(const std::vector<Prediction>& predictions, std::size_t expert_count);

/// infer_records followed by writing the CSV to `out_path`.
InferSummary batch_infer(const EnsembleConfig& config, const std::vector<ManifestRecord>& records,
                         const ImageLoader& loader, const std::filesystem::path& out_path,
                         std::size_t jobs = 1);

struct PredictionRow {
  std::string item_id;
  double p_final = 0.0;
  std::vector<double> per_expert;
};

std::vector<PredictionRow> parse_predictions_csv(std::string_view text);
std::vector<PredictionRow> load_predictions(const std::filesystem::path& path);

}  // namespace featdistill
