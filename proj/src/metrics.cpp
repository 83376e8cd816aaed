#include "featdistill/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "featdistill/errors.hpp"

namespace featdistill {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: scores/labels length mismatch");
  std::uint64_t n[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidArgument("roc_auc: scores must be finite");
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("roc_auc: labels must be 0 or 1");
    ++n[labels[i]];
  }
  if (n[0] == 0 || n[1] == 0) throw InvalidArgument("roc_auc needs both labels present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the U statistic, kept integral so the result is exact.
  std::uint64_t twice_u = 0;
  std::uint64_t reals_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t group[2] = {0, 0};
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++group[labels[order[j++]]];
    twice_u += group[1] * (2 * reals_below + group[0]);
    reals_below += group[0];
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n[0]) * static_cast<double>(n[1]));
}

double roc_auc(std::span<const ScoredItem> items) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(items.size());
  labels.reserve(items.size());
  for (const auto& item : items) {
    scores.push_back(item.score);
    labels.push_back(item.label);
  }
  return roc_auc(scores, labels);
}

namespace {

template <class Key>
void add_group(std::map<Key, std::vector<ScoredItem>>& groups, std::map<Key, double>& aucs,
               std::map<Key, std::size_t>& counts) {
  for (const auto& [key, members] : groups) {
    const bool has_real = std::any_of(members.begin(), members.end(), [](const auto& m) { return m.label == 0; });
    const bool has_fake = std::any_of(members.begin(), members.end(), [](const auto& m) { return m.label == 1; });
    if (!has_real || !has_fake) continue;
    aucs[key] = roc_auc(members);
    counts[key] = members.size();
  }
}

}  // namespace

RobustReport robust_report(std::span<const ScoredItem> items) {
  RobustReport report;
  report.overall_auc = roc_auc(items);
  report.overall_count = items.size();
  std::map<std::string, std::vector<ScoredItem>> by_operator;
  std::map<int, std::vector<ScoredItem>> by_severity;
  for (const auto& item : items) {
    if (item.distortion_tag) by_operator[*item.distortion_tag].push_back(item);
    if (item.severity) by_severity[*item.severity].push_back(item);
  }
  add_group(by_operator, report.per_operator, report.operator_counts);
  add_group(by_severity, report.per_severity, report.severity_counts);
  return report;
}

nlohmann::ordered_json report_to_json(const RobustReport& report) {
  nlohmann::ordered_json j;
  j["overall_auc"] = report.overall_auc;
  j["per_operator"] = nlohmann::ordered_json::object();
  for (const auto& [op, auc] : report.per_operator) j["per_operator"][op] = auc;
  j["per_severity"] = nlohmann::ordered_json::object();
  for (const auto& [sev, auc] : report.per_severity) j["per_severity"][std::to_string(sev)] = auc;
  nlohmann::ordered_json counts;
  counts["overall"] = report.overall_count;
  counts["per_operator"] = nlohmann::ordered_json::object();
  for (const auto& [op, n] : report.operator_counts) counts["per_operator"][op] = n;
  counts["per_severity"] = nlohmann::ordered_json::object();
  for (const auto& [sev, n] : report.severity_counts) counts["per_severity"][std::to_string(sev)] = n;
  j["counts"] = std::move(counts);
  return j;
}

std::string report_table(const RobustReport& report) {
  std::vector<std::array<std::string, 3>> rows;
  char buf[32];
  auto fmt = [&](double auc) {
    std::snprintf(buf, sizeof(buf), "%.6f", auc);
    return std::string(buf);
  };
  rows.push_back({"overall", fmt(report.overall_auc), std::to_string(report.overall_count)});
  for (const auto& [op, auc] : report.per_operator) {
    rows.push_back({"operator:" + op, fmt(auc), std::to_string(report.operator_counts.at(op))});
  }
  for (const auto& [sev, auc] : report.per_severity) {
    rows.push_back({"severity:" + std::to_string(sev), fmt(auc), std::to_string(report.severity_counts.at(sev))});
  }
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r[0].size());
  std::string out;
  auto line = [&](const std::string& a, const std::string& b, const std::string& c) {
    out += a + std::string(width - a.size() + 2, ' ') + b + std::string(b.size() < 8 ? 8 - b.size() + 2 : 2, ' ') + c + '\n';
  };
  line("group", "auc", "n");
  for (const auto& r : rows) line(r[0], r[1], r[2]);
  return out;
}

}  // namespace featdistill
