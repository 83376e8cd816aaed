#include "featdistill/ensemble.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "featdistill/errors.hpp"
#include "featdistill/log.hpp"
#include "featdistill/parallel.hpp"

namespace featdistill {

void validate(const EnsembleConfig& config) {
  if (config.experts.empty()) throw InvalidArgument("ensemble needs at least one expert");
  for (const auto& e : config.experts) {
    if (!e.extractor) throw InvalidArgument("expert '" + e.name + "' has no extractor");
    const auto d = static_cast<Eigen::Index>(e.extractor->dim());
    if (e.checkpoint.head.weights.size() != d ||
        (e.checkpoint.projector && (e.checkpoint.projector->rows() != d || e.checkpoint.projector->cols() != d))) {
      throw InvalidArgument("expert '" + e.name + "': checkpoint dim does not match extractor dim " +
                            std::to_string(d));
    }
    if (e.extractor->needs_image() && e.extractor->input_side() != e.profile.input_side) {
      throw InvalidArgument("expert '" + e.name + "': extractor side does not match preprocessing side");
    }
  }
}

double soft_vote(std::span<const double> probs) {
  if (probs.empty()) throw InvalidArgument("soft_vote needs at least one probability");
  const double first = probs[0];
  double offset = 0.0;
  for (double p : probs) offset += p - first;
  const auto [lo, hi] = std::minmax_element(probs.begin(), probs.end());
  return std::clamp(first + offset / static_cast<double>(probs.size()), *lo, *hi);
}

double predict_expert(const Expert& expert, const ImageBuffer* img, const std::string& item_id) {
  if (!expert.extractor) throw InvalidArgument("expert '" + expert.name + "' has no extractor");
  if (!expert.extractor->needs_image()) return predict(expert.checkpoint, expert.extractor->extract(nullptr, item_id));
  if (img == nullptr) throw InvalidArgument("expert '" + expert.name + "' needs an image");
  const Tensor tensor = preprocess(*img, expert.profile);
  return predict(expert.checkpoint, expert.extractor->extract(&tensor, item_id));
}

Prediction ensemble_predict(const EnsembleConfig& config, const ImageBuffer* img, const std::string& item_id) {
  if (config.experts.empty()) throw InvalidArgument("ensemble needs at least one expert");
  Prediction out;
  out.item_id = item_id;
  out.per_expert.reserve(config.experts.size());
  for (const auto& expert : config.experts) out.per_expert.push_back(predict_expert(expert, img, item_id));
  out.p_final = soft_vote(out.per_expert);
  return out;
}

bool needs_images(const EnsembleConfig& config) {
  return std::any_of(config.experts.begin(), config.experts.end(),
                     [](const Expert& e) { return e.extractor && e.extractor->needs_image(); });
}

InferSummary infer_records(const EnsembleConfig& config, const std::vector<ManifestRecord>& records,
                           const ImageLoader& loader, std::size_t jobs) {
  validate(config);
  const bool load = needs_images(config);
  std::vector<std::optional<Prediction>> slots(records.size());
  std::vector<std::string> errors(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const ManifestRecord& r = records[i];
    try {
      std::optional<ImageBuffer> img;
      if (load) {
        img = to_rgb(loader(r.path));
        if (r.distortion) img = apply(*r.distortion, *img);
      }
      slots[i] = ensemble_predict(config, img ? &*img : nullptr, r.path);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  InferSummary summary;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i]) {
      summary.predictions.push_back(std::move(*slots[i]));
    } else {
      summary.failed.push_back(records[i].path + ": " + errors[i]);
      log_warn("skipping " + records[i].path + ": " + errors[i]);
    }
  }
  return summary;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string predictions_csv(const std::vector<Prediction>& predictions, std::size_t expert_count) {
  std::string out = "item_id,p_final";
  for (std::size_t k = 1; k <= expert_count; ++k) out += ",p_" + std::to_string(k);
  out += '\n';
  for (const auto& p : predictions) {
    if (p.per_expert.size() != expert_count) throw InvalidArgument("prediction has wrong expert count");
    out += csv_field(p.item_id) + ',' + fixed6(p.p_final);
    for (double v : p.per_expert) out += ',' + fixed6(v);
    out += '\n';
  }
  return out;
}

InferSummary batch_infer(const EnsembleConfig& config, const std::vector<ManifestRecord>& records,
                         const ImageLoader& loader, const std::filesystem::path& out_path, std::size_t jobs) {
  InferSummary summary = infer_records(config, records, loader, jobs);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot write predictions " + out_path.string());
  out << predictions_csv(summary.predictions, config.experts.size());
  return summary;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_prob(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line_no, "bad probability '" + s + "'");
  }
  if (used != s.size() || !(v >= 0.0 && v <= 1.0)) throw ParseError(line_no, "bad probability '" + s + "'");
  return v;
}

}  // namespace

std::vector<PredictionRow> parse_predictions_csv(std::string_view text) {
  std::vector<PredictionRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (line_no == 1) {
      if (fields.size() < 3 || fields[0] != "item_id" || fields[1] != "p_final") {
        throw ParseError(1, "predictions header must start with item_id,p_final,p_1");
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) throw ParseError(line_no, "wrong number of columns");
    PredictionRow row{fields[0], parse_prob(fields[1], line_no), {}};
    for (std::size_t k = 2; k < fields.size(); ++k) row.per_expert.push_back(parse_prob(fields[k], line_no));
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw ParseError(0, "predictions file is empty");
  return rows;
}

std::vector<PredictionRow> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("predictions not found: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_predictions_csv(buffer.str());
}

}  // namespace featdistill
