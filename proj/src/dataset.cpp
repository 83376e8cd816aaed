#include "featdistill/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "featdistill/errors.hpp"
#include "featdistill/parallel.hpp"

namespace featdistill {

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "hardval") return Split::HardVal;
  if (text == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::HardVal: return "hardval";
    case Split::Test: return "test";
  }
  return "unknown";
}

namespace {

ManifestRecord parse_record(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "manifest record must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "path" && key != "label" && key != "source" && key != "split" && key != "distortion") {
      throw ParseError(line, "unknown manifest field '" + key + "'");
    }
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
    return j.at(key);
  };
  ManifestRecord r;
  const auto& path = require("path");
  if (!path.is_string() || path.get<std::string>().empty()) {
    throw ParseError(line, "'path' must be a nonempty string");
  }
  r.path = path.get<std::string>();
  const auto& label = require("label");
  if (!label.is_number_integer() || (label.get<long long>() != 0 && label.get<long long>() != 1)) {
    throw ParseError(line, "label must be 0 or 1, got " + label.dump());
  }
  r.label = label.get<int>();
  const auto& source = require("source");
  if (!source.is_string()) throw ParseError(line, "'source' must be a string");
  r.source = source.get<std::string>();
  const auto& split = require("split");
  if (!split.is_string()) throw ParseError(line, "'split' must be a string");
  try {
    r.split = parse_split(split.get<std::string>());
    if (j.contains("distortion") && !j.at("distortion").is_null()) {
      r.distortion = spec_from_json(j.at("distortion"));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(line, e.what());
  }
  return r;
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(std::string_view text) {
  std::vector<ManifestRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    records.push_back(parse_record(j, line_no));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

std::string manifest_line(const ManifestRecord& record) {
  nlohmann::ordered_json j;
  j["path"] = record.path;
  j["label"] = record.label;
  j["source"] = record.source;
  j["split"] = std::string(split_name(record.split));
  if (record.distortion) j["distortion"] = spec_to_json(*record.distortion);
  return j.dump();
}

void save_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write manifest " + path.string());
  for (const auto& r : records) out << manifest_line(r) << '\n';
}

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records, Split split) {
  std::vector<ManifestRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const ManifestRecord& r) { return r.split == split; });
  return out;
}

ExpertKind parse_expert_kind(std::string_view text) {
  if (text == "clip_l14") return ExpertKind::ClipL14;
  if (text == "siglip_400m") return ExpertKind::SigLip400M;
  if (text == "synthetic_a") return ExpertKind::SyntheticA;
  if (text == "synthetic_b") return ExpertKind::SyntheticB;
  throw InvalidArgument("unknown expert kind '" + std::string(text) + "'");
}

std::string_view expert_kind_name(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::ClipL14: return "clip_l14";
    case ExpertKind::SigLip400M: return "siglip_400m";
    case ExpertKind::SyntheticA: return "synthetic_a";
    case ExpertKind::SyntheticB: return "synthetic_b";
  }
  return "unknown";
}

ExpertProfile default_profile(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::ClipL14:
      return {kind, 224, {0.48145466, 0.4578275, 0.40821073}, {0.26862954, 0.26130258, 0.27577711}};
    case ExpertKind::SigLip400M:
      return {kind, 384, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    case ExpertKind::SyntheticA:
      return {kind, 32, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    case ExpertKind::SyntheticB:
      return {kind, 48, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
  }
  throw InvalidArgument("unknown expert kind");
}

Tensor preprocess(const ImageBuffer& img, const ExpertProfile& profile) {
  if (img.channels() != 3) throw InvalidArgument("preprocess requires a 3-channel image");
  if (profile.input_side <= 0) throw InvalidArgument("expert input_side must be > 0");
  const int side = profile.input_side;
  const double scale = static_cast<double>(side) / std::min(img.width(), img.height());
  const int w = std::max(side, static_cast<int>(std::lround(img.width() * scale)));
  const int h = std::max(side, static_cast<int>(std::lround(img.height() * scale)));
  const ImageBuffer resized = resize_bilinear(img, w, h);
  const int x0 = (w - side) / 2;
  const int y0 = (h - side) / 2;
  Tensor t{side, std::vector<float>(static_cast<std::size_t>(side) * side * 3)};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.values[(static_cast<std::size_t>(y) * side + x) * 3 + c] = static_cast<float>(
            (resized.at(x0 + x, y0 + y, c) - profile.mean[c]) / profile.std[c]);
      }
    }
  }
  return t;
}

std::pair<ImageBuffer, std::optional<DistortionSpec>> augment(const ImageBuffer& img,
                                                              PipelineMode mode, SeededRng& rng) {
  std::optional<DistortionSpec> spec = sample_spec(rng, mode);
  if (!spec) return {img, std::nullopt};
  return {apply(*spec, img), std::move(spec)};
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

std::vector<BatchPlan> balanced_batches(const std::vector<ManifestRecord>& records,
                                        std::size_t batch_size, std::uint64_t seed,
                                        std::uint64_t epoch,
                                        const std::map<std::string, double>& source_weights) {
  if (batch_size < 2 || batch_size % 2 != 0) throw InvalidArgument("batch_size must be even and >= 2");
  SeededRng rng(mix64(seed, epoch));
  SeededRng weight_rng(mix64(seed, 0x5EED5011CEULL));
  std::array<std::vector<std::size_t>, 2> pools;
  for (std::size_t i = 0; i < records.size(); ++i) {
    double weight = 1.0;
    if (const auto it = source_weights.find(records[i].source); it != source_weights.end()) {
      weight = it->second;
    }
    if (weight < 0.0) throw InvalidArgument("source weights must be >= 0");
    auto copies = static_cast<std::size_t>(std::floor(weight));
    if (weight_rng.uniform() < weight - std::floor(weight)) ++copies;
    for (std::size_t c = 0; c < copies; ++c) pools[static_cast<std::size_t>(records[i].label)].push_back(i);
  }
  if (pools[0].empty() || pools[1].empty()) {
    throw InvalidArgument("balanced_batches needs both labels present");
  }
  const std::size_t half = batch_size / 2;
  const std::size_t larger = std::max(pools[0].size(), pools[1].size());
  const std::size_t n_batches = (larger + half - 1) / half;
  std::array<std::vector<std::size_t>, 2> streams;
  for (std::size_t label = 0; label < 2; ++label) {
    while (streams[label].size() < n_batches * half) {
      std::vector<std::size_t> pass = pools[label];
      shuffle(pass, rng);
      streams[label].insert(streams[label].end(), pass.begin(), pass.end());
    }
  }
  std::vector<BatchPlan> plans(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    auto& items = plans[b].items;
    for (std::size_t label = 0; label < 2; ++label) {
      items.insert(items.end(), streams[label].begin() + static_cast<std::ptrdiff_t>(b * half),
                   streams[label].begin() + static_cast<std::ptrdiff_t>((b + 1) * half));
    }
    shuffle(items, rng);
  }
  return plans;
}

std::uint64_t item_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t slot,
                        std::uint64_t view) {
  return mix64(mix64(mix64(seed, epoch), slot), view);
}

Batch materialize_batch(const BatchPlan& plan, const std::vector<ManifestRecord>& records,
                        const ImageLoader& loader, const ExpertProfile& profile,
                        PipelineMode mode, std::uint64_t seed, std::uint64_t epoch,
                        std::uint64_t first_slot, std::uint64_t view, std::size_t jobs) {
  const std::size_t n = plan.items.size();
  Batch batch;
  batch.tensors.resize(n);
  batch.labels.resize(n);
  batch.item_ids.resize(n);
  batch.applied_specs.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const ManifestRecord& record = records.at(plan.items[i]);
    SeededRng rng(item_seed(seed, epoch, first_slot + i, view));
    auto [img, spec] = augment(to_rgb(loader(record.path)), mode, rng);
    batch.tensors[i] = preprocess(img, profile);
    batch.labels[i] = record.label;
    batch.item_ids[i] = record.path;
    batch.applied_specs[i] = std::move(spec);
  });
  return batch;
}

}  // namespace featdistill
