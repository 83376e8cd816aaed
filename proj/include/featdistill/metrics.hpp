#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace featdistill {

struct ScoredItem {
  double score = 0.0;  // higher = more likely AI-generated
  int label = 0;
  std::optional<std::string> distortion_tag;
  std::optional<int> severity;
};

/// Mann-Whitney AUC with half credit for ties. Sort-based, O(n log n).
double roc_auc(std::span<const ScoredItem> items);
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RobustReport {
  double overall_auc = 0.0;
  std::size_t overall_count = 0;
  // Groups lacking one of the classes are left out.
  std::map<std::string, double> per_operator;
  std::map<int, double> per_severity;
  std::map<std::string, std::size_t> operator_counts;
  std::map<int, std::size_t> severity_counts;
};

RobustReport robust_report(std::span<const ScoredItem> items);
nlohmann::ordered_json report_to_json(const RobustReport& report);
/// Aligned plain-text rendering: one row per group.
std::string report_table(const RobustReport& report);

}  // namespace featdistill
