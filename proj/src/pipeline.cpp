#include "featdistill/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "featdistill/errors.hpp"
#include "featdistill/image_io.hpp"
#include "featdistill/log.hpp"
#include "featdistill/parallel.hpp"
#include "featdistill/scene.hpp"

namespace featdistill {

namespace fs = std::filesystem;

ImageBuffer load_image(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return to_rgb(decode_jpeg(bytes));
  }
  return to_rgb(load_png(path));
}

ImageLoader relative_loader(const fs::path& base) {
  return [base](const std::string& item) {
    const fs::path p(item);
    return load_image(p.is_absolute() ? p : base / p);
  };
}

ManifestBatchSource::ManifestBatchSource(std::vector<ManifestRecord> records, ExpertProfile profile,
                                         std::shared_ptr<const Extractor> extractor, ImageLoader loader,
                                         PipelineMode mode, std::size_t batch_size, std::uint64_t seed,
                                         std::map<std::string, double> source_weights, std::size_t jobs)
    : records_(std::move(records)),
      profile_(profile),
      extractor_(std::move(extractor)),
      loader_(std::move(loader)),
      mode_(mode),
      batch_size_(batch_size),
      seed_(seed),
      weights_(std::move(source_weights)),
      jobs_(jobs) {
  if (!extractor_) throw InvalidArgument("batch source needs an extractor");
  per_epoch_ = plans(0).size();
}

const std::vector<BatchPlan>& ManifestBatchSource::plans(std::uint64_t epoch) const {
  if (cached_epoch_ != epoch) {
    cached_plans_ = balanced_batches(records_, batch_size_, seed_, epoch, weights_);
    cached_epoch_ = epoch;
  }
  return cached_plans_;
}

FeatureBatch ManifestBatchSource::batch(std::uint64_t epoch, std::size_t index, bool two_views) const {
  const BatchPlan plan = plans(epoch).at(index);
  const std::size_t n = plan.items.size();
  FeatureBatch out;
  for (std::size_t item : plan.items) out.labels.push_back(records_[item].label);
  if (!extractor_->needs_image()) {
    for (std::size_t item : plan.items) out.views.push_back(extractor_->extract(nullptr, records_[item].path));
    return out;
  }
  auto extract_all = [&](std::uint64_t view) {
    const Batch b = materialize_batch(plan, records_, loader_, profile_, mode_, seed_, epoch,
                                      index * batch_size_, view, jobs_);
    std::vector<FeatureMap> maps(n);
    parallel_for(n, jobs_, [&](std::size_t i) { maps[i] = extractor_->extract(&b.tensors[i], b.item_ids[i]); });
    return maps;
  };
  out.views = extract_all(0);
  if (two_views) out.second_views = extract_all(1);
  return out;
}

std::uint64_t expert_seed(const RunConfig& config, const ExpertSpec& expert) {
  return mix64(config.seed, expert.seed);
}

std::vector<FeatureMap> clean_features(const std::vector<ManifestRecord>& records, const ExpertProfile& profile,
                                       const Extractor& extractor, const ImageLoader& loader, std::size_t jobs) {
  std::vector<FeatureMap> maps(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    if (!extractor.needs_image()) {
      maps[i] = extractor.extract(nullptr, records[i].path);
      return;
    }
    const Tensor t = preprocess(loader(records[i].path), profile);
    maps[i] = extractor.extract(&t, records[i].path);
  });
  return maps;
}

fs::path stage1_checkpoint_path(const RunConfig& config, const ExpertSpec& expert) {
  return config.output_dir / (expert.name + ".stage1.fdck");
}

fs::path stage2_checkpoint_path(const RunConfig& config, const ExpertSpec& expert) {
  return config.output_dir / (expert.name + ".stage2.fdck");
}

fs::path training_log_path(const RunConfig& config, const ExpertSpec& expert) {
  return config.output_dir / (expert.name + ".train.jsonl");
}

namespace {

double features_auc(const Checkpoint& ckpt, const std::vector<FeatureMap>& maps,
                    const std::vector<ManifestRecord>& records) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    scores.push_back(predict(ckpt, maps[i]));
    labels.push_back(records[i].label);
  }
  return roc_auc(scores, labels);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Location-independent: embedding files are named relative to the config
// directory and identified by content hash.
nlohmann::ordered_json extractor_summary(const RunConfig& config, const ExpertSpec& expert) {
  nlohmann::ordered_json j;
  if (expert.extractor.type == ExtractorRef::Type::Synthetic) {
    j["type"] = "synthetic";
    j["seed"] = expert.extractor.seed;
    j["dim"] = expert.extractor.dim;
  } else {
    j["type"] = "embedding_file";
    j["path"] = expert.extractor.path.lexically_relative(config.base_dir).generic_string();
    j["fnv1a64"] = fnv1a64(read_text(expert.extractor.path));
  }
  return j;
}

}  // namespace

std::vector<ExpertTrainResult> run_train(const RunConfig& config, std::size_t jobs) {
  validate(config.train);
  const auto records = filter_split(load_manifest(config.manifest), config.train_split);
  if (records.empty()) throw InvalidArgument("no records in split '" + std::string(split_name(config.train_split)) + "'");
  fs::create_directories(config.output_dir);
  const ImageLoader loader = relative_loader(config.manifest.parent_path());
  std::vector<ExpertTrainResult> results;
  nlohmann::ordered_json summary;
  summary["experts"] = nlohmann::ordered_json::array();
  for (const auto& expert : config.experts) {
    const auto extractor = make_extractor(expert.extractor, expert.profile.input_side);
    ManifestBatchSource source(records, expert.profile, extractor, loader, config.pipeline_mode, config.batch_size,
                               expert_seed(config, expert), config.source_weights, jobs);
    ExpertTrainResult r;
    r.name = expert.name;
    log_info("training expert " + expert.name + " (" + extractor->descriptor() + ")");
    r.stage1 = train_stage1(config.train, source);
    r.stage2 = train_stage2(config.train, source, r.stage1.checkpoint);
    const auto maps = clean_features(records, expert.profile, *extractor, loader, jobs);
    r.stage1_train_auc = features_auc(r.stage1.checkpoint, maps, records);
    r.stage2_train_auc = features_auc(r.stage2.checkpoint, maps, records);

    save_checkpoint(stage1_checkpoint_path(config, expert), r.stage1.checkpoint);
    save_checkpoint(stage2_checkpoint_path(config, expert), r.stage2.checkpoint);
    std::vector<StepLog> log = r.stage1.log;
    log.insert(log.end(), r.stage2.log.begin(), r.stage2.log.end());
    write_training_log(training_log_path(config, expert), log);

    nlohmann::ordered_json e;
    e["name"] = expert.name;
    e["extractor"] = extractor_summary(config, expert);
    e["stage1_steps"] = r.stage1.log.size();
    e["stage2_steps"] = r.stage2.log.size();
    e["stage1_train_auc"] = r.stage1_train_auc;
    e["stage2_train_auc"] = r.stage2_train_auc;
    summary["experts"].push_back(std::move(e));
    results.push_back(std::move(r));
  }
  summary["train_config"] = to_json(config.train);
  summary["config_hash"] = config_hash(config.train);
  write_text(config.output_dir / "train_summary.json", summary.dump(2) + "\n");
  return results;
}

EnsembleConfig load_ensemble(const RunConfig& config) {
  EnsembleConfig ensemble;
  for (const auto& expert : config.experts) {
    const fs::path ckpt = stage2_checkpoint_path(config, expert);
    if (!fs::exists(ckpt)) throw NotFound("missing checkpoint " + ckpt.string());
    if (expert.extractor.type == ExtractorRef::Type::EmbeddingFile && !fs::exists(expert.extractor.path)) {
      throw NotFound("missing embedding file " + expert.extractor.path.string());
    }
    ensemble.experts.push_back(
        {expert.name, expert.profile, make_extractor(expert.extractor, expert.profile.input_side), load_checkpoint(ckpt)});
  }
  validate(ensemble);
  return ensemble;
}

InferSummary run_infer(const RunConfig& config, const fs::path& manifest, std::optional<Split> split,
                       const fs::path& out_csv, std::size_t jobs) {
  const EnsembleConfig ensemble = load_ensemble(config);
  auto records = load_manifest(manifest);
  if (split) records = filter_split(records, *split);
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  return batch_infer(ensemble, records, relative_loader(manifest.parent_path()), out_csv, jobs);
}

RobustReport run_eval(const fs::path& predictions, const fs::path& manifest, const fs::path& report_path) {
  const auto rows = load_predictions(predictions);
  if (rows.empty()) throw InvalidArgument("predictions file has no items");
  std::map<std::string, const ManifestRecord*> by_id;
  const auto records = load_manifest(manifest);
  for (const auto& r : records) by_id[r.path] = &r;
  std::vector<ScoredItem> items;
  items.reserve(rows.size());
  for (const auto& row : rows) {
    const auto it = by_id.find(row.item_id);
    if (it == by_id.end()) throw NotFound("predicted item '" + row.item_id + "' is not in the manifest");
    ScoredItem item{row.p_final, it->second->label, std::nullopt, std::nullopt};
    if (it->second->distortion) {
      item.distortion_tag = std::string(operator_name(it->second->distortion->op));
      item.severity = it->second->distortion->severity;
    }
    items.push_back(std::move(item));
  }
  const RobustReport report = robust_report(items);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  write_text(report_path, report_to_json(report).dump(2) + "\n");
  fs::path table = report_path;
  table.replace_extension(".txt");
  write_text(table, report_table(report));
  return report;
}

DistortSummary run_distort(const fs::path& in_dir, const fs::path& out_dir, PipelineMode mode, std::uint64_t seed,
                           std::size_t count, std::size_t jobs) {
  if (!fs::is_directory(in_dir)) throw NotFound("input directory not found: " + in_dir.string());
  if (count == 0) throw InvalidArgument("count must be >= 1");
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> lines(inputs.size());
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    const std::string name = inputs[i].filename().string();
    try {
      const ImageBuffer img = load_image(inputs[i]);
      const std::uint64_t file_seed = mix64(seed, fnv1a64(name));
      for (std::size_t k = 0; k < count; ++k) {
        SeededRng rng(mix64(file_seed, k));
        const auto [out, spec] = augment(img, mode, rng);
        const std::string out_name = inputs[i].stem().string() + "_" + std::to_string(k) + ".png";
        save_png(out, out_dir / out_name);
        nlohmann::ordered_json j;
        j["input"] = name;
        j["output"] = out_name;
        j["distortion"] = spec ? spec_to_json(*spec) : nlohmann::ordered_json(nullptr);
        lines[i].push_back(j.dump());
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      lines[i].clear();
    }
  });
  DistortSummary summary;
  std::string log;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!errors[i].empty()) {
      summary.failed.push_back(inputs[i].filename().string() + ": " + errors[i]);
      log_warn("cannot distort " + inputs[i].string() + ": " + errors[i]);
      continue;
    }
    for (const auto& l : lines[i]) log += l + '\n';
    summary.written += lines[i].size();
  }
  write_text(out_dir / "specs.jsonl", log);
  return summary;
}

namespace {

// Faint 4-pixel checker added to generated ("fake") toy images, standing in
// for upsampling traces.
void add_generator_trace(ImageBuffer& img, float amplitude) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float sign = ((x / 2 + y / 2) % 2 == 0) ? 1.0f : -1.0f;
      for (int c = 0; c < img.channels(); ++c) {
        img.at(x, y, c) = std::clamp(img.at(x, y, c) + sign * amplitude, 0.0f, 1.0f);
      }
    }
  }
}

std::string relative_or_throw(const nlohmann::json& j, const char* key) {
  const std::string p = j.at(key).get<std::string>();
  if (fs::path(p).is_absolute()) throw InvalidArgument(std::string("prepare needs a relative '") + key + "' path");
  return p;
}

}  // namespace

PrepareSummary run_prepare(const fs::path& config_path, const fs::path& out_dir, std::size_t jobs) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config " + config_path.string());
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config is not valid JSON: " + std::string(e.what()));
  }
  const RunConfig probe = parse_run_config(raw, out_dir);
  if (!probe.toy) throw InvalidArgument("config has no 'toy' block; prepare only builds the toy corpus");
  relative_or_throw(raw, "manifest");
  for (const auto& e : raw.at("experts")) {
    if (e.at("extractor").at("type") == "embedding_file") relative_or_throw(e.at("extractor"), "path");
  }

  fs::create_directories(out_dir);
  const fs::path config_copy = out_dir / "config.json";
  write_text(config_copy, raw.dump(2) + "\n");
  const RunConfig config = load_run_config(config_copy);
  const ToySpec& toy = *config.toy;
  const fs::path manifest_dir = config.manifest.parent_path();
  fs::create_directories(manifest_dir / "images");

  std::vector<ManifestRecord> records(toy.items);
  for (std::size_t i = 0; i < toy.items; ++i) {
    ManifestRecord& r = records[i];
    char name[32];
    std::snprintf(name, sizeof(name), "images/item_%05zu.png", i);
    r.path = name;
    r.label = static_cast<int>(i % 2);
    r.source = r.label == 1 ? "toy-generator" : "toy-camera";
    r.split = i < toy.train_items ? Split::Train : Split::Test;
    if (r.split == Split::Test) {
      SeededRng rng(mix64(mix64(config.seed, 0xD15C0), i));
      if (rng.bernoulli(toy.test_distorted_fraction)) r.distortion = sample_spec(rng, PipelineMode::MixedEqual);
    }
  }
  save_manifest(records, config.manifest);

  parallel_for(records.size(), jobs, [&](std::size_t i) {
    ImageBuffer img = make_scene(mix64(mix64(config.seed, 0x5CE4E), i), toy.image_side, toy.image_side);
    if (records[i].label == 1) add_generator_trace(img, 0.04f);
    save_png(img, manifest_dir / records[i].path);
  });

  std::set<fs::path> written;
  std::size_t file_index = 0;
  for (const auto& expert : config.experts) {
    if (expert.extractor.type != ExtractorRef::Type::EmbeddingFile) continue;
    if (!written.insert(expert.extractor.path).second) continue;
    const ToyFeatureWorld world(toy.world, mix64(mix64(config.seed, 0xE3B), file_index++));
    EmbeddingTable table;
    table.tokens = static_cast<std::uint32_t>(toy.world.tokens);
    table.dim = static_cast<std::uint32_t>(toy.world.dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const FeatureMap f = world.sample(i, records[i].label, records[i].distortion);
      std::vector<float> values(static_cast<std::size_t>(f.tokens.size()));
      for (Eigen::Index t = 0; t < f.tokens.rows(); ++t) {
        for (Eigen::Index d = 0; d < f.tokens.cols(); ++d) {
          values[static_cast<std::size_t>(t * f.tokens.cols() + d)] = static_cast<float>(f.tokens(t, d));
        }
      }
      table.rows.emplace(records[i].path, std::move(values));
    }
    if (expert.extractor.path.has_parent_path()) fs::create_directories(expert.extractor.path.parent_path());
    write_embeddings(expert.extractor.path, table);
  }
  return {config_copy, records.size(), written.size()};
}

}  // namespace featdistill
