#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdistill/dataset.hpp"
#include "featdistill/features.hpp"
#include "featdistill/toy.hpp"
#include "featdistill/trainer.hpp"

namespace featdistill {

struct ExpertSpec {
  std::string name;
  ExpertProfile profile;
  ExtractorRef extractor;
  // Combined with the run seed to seed this expert's batches.
  std::uint64_t seed = 0;
};

/// Generator settings used by `prepare` to build the toy corpus.
struct ToySpec {
  std::size_t items = 640;
  std::size_t train_items = 512;
  int image_side = 64;
  // Fraction of test items that carry a distortion.
  double test_distorted_fraction = 0.5;
  ToyWorldParams world;
};

/// Parsed run configuration. Relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  PipelineMode pipeline_mode = PipelineMode::Clean;
  std::size_t batch_size = 32;
  Split train_split = Split::Train;
  std::map<std::string, double> source_weights;
  TrainConfig train;
  std::vector<ExpertSpec> experts;
  std::optional<ToySpec> toy;
};

/// Strict schema check: unknown keys and wrong types are rejected with an
/// InvalidArgument naming the key.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace featdistill
