// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "featdistill/config.hpp"
#include "featdistill/ensemble.hpp"
#include "featdistill/log.hpp"
#include "featdistill/metrics.hpp"
#include "featdistill/pipeline.hpp"
#include "featdistill/scene.hpp"
#include "featdistill/toy.hpp"
#include "featdistill/trainer.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace featdistill;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<ImageBuffer>& corpus() {
  static const auto c = testsupport::corpus20();
  return c;
}

std::uint64_t image_seed(std::size_t i) { return mix64(7, i); }

Outcome ac1_equation_fidelity() {
  double worst_m = 0.0;
  worst_m = std::max(worst_m, std::abs(momentum(0, 1000, 0.99, 0.9999) - 0.99));
  worst_m = std::max(worst_m, std::abs(momentum(1000, 1000, 0.99, 0.9999) - 0.9999));
  worst_m = std::max(worst_m, std::abs(momentum(500, 1000, 0.99, 0.9999) - 0.99495));

  auto map = [](std::initializer_list<double> row) {
    Matrix m(1, static_cast<Eigen::Index>(row.size()));
    Eigen::Index c = 0;
    for (double v : row) m(0, c++) = v;
    return make_feature_map(m);
  };
  double worst_l = 0.0;
  const FeatureMap same = map({0.3, -1.2, 4.0});
  worst_l = std::max(worst_l, std::abs(distill_loss(same, same) - 0.0));
  worst_l = std::max(worst_l, std::abs(distill_loss(map({1, 2}), map({0, 0})) - 5.0));
  worst_l = std::max(worst_l, std::abs(distill_loss(map({3}), map({1})) - 4.0));
  const std::vector<int> one{1};
  worst_l = std::max(worst_l, std::abs(bce_loss(std::vector<double>{0.5}, one) - 0.693147180559945));
  worst_l = std::max(worst_l, std::abs(bce_loss(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) - 0.105360515657826));
  const double perfect = bce_loss(std::vector<double>{1.0 - kProbEpsilon}, one);
  const bool pass = worst_m <= 1e-12 && worst_l <= 1e-9 && perfect <= 1.1e-7;
  return {pass, fmt("max momentum error %.2e", worst_m) + fmt(", max loss error %.2e", worst_l)};
}

Outcome ac2_gradients() {
  const int per_term = 60;
  double worst[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < per_term; ++i) {
    ObjectiveWeights bce;
    ObjectiveWeights distill;
    distill.bce_weight = 0.0;
    distill.distill_weight = 1.0;
    ObjectiveWeights crd;
    crd.bce_weight = 0.0;
    crd.lambda_crd = 1.0;
    const ObjectiveWeights* terms[3] = {&bce, &distill, &crd};
    for (int t = 0; t < 3; ++t) {
      const auto inst = testsupport::random_grad_instance(mix64(0xAC2, static_cast<std::uint64_t>(t * 1000 + i)));
      worst[t] = std::max(worst[t], testsupport::fd_relative_error(inst, *terms[t]));
    }
  }
  const bool pass = worst[0] <= 1e-5 && worst[1] <= 1e-5 && worst[2] <= 1e-5;
  return {pass, std::to_string(per_term) + " instances per term; max rel error bce " + fmt("%.2e", worst[0]) +
                    ", distill " + fmt("%.2e", worst[1]) + ", crd " + fmt("%.2e", worst[2])};
}

Outcome ac3_toy_end_to_end() {
  testsupport::TempDir dir("acceptance_ac3");
  const fs::path config = fs::path(FEATDISTILL_SOURCE_DIR) / "configs" / "toy.json";
  const RunConfig cfg = load_run_config(run_prepare(config, dir.path(), 1).config_path);
  const auto results = run_train(cfg, 1);
  bool pass = cfg.train.teacher_mode == TeacherMode::Momentum && cfg.train.stage1_epochs <= 2 &&
              cfg.toy && cfg.toy->train_items == 512 && !results.empty();
  double min1 = 1.0, min2 = 1.0, worst_m = 0.0;
  for (const auto& r : results) {
    min1 = std::min(min1, r.stage1_train_auc);
    min2 = std::min(min2, r.stage2_train_auc);
    const auto& log = r.stage2.log;
    const double last = static_cast<double>(std::max<std::size_t>(log.size() - 1, 1));
    for (std::size_t s = 0; s < log.size(); ++s) {
      if (!log[s].momentum) {
        pass = false;
        continue;
      }
      const double expected = cfg.train.m_max - (cfg.train.m_max - cfg.train.m_base) *
                                                    (std::cos(std::numbers::pi * static_cast<double>(s) / last) + 1.0) / 2.0;
      worst_m = std::max(worst_m, std::abs(*log[s].momentum - expected));
    }
  }
  pass = pass && min1 >= 0.99 && min2 >= 0.99 && worst_m <= 1e-12;
  return {pass, std::to_string(results.size()) + " experts; min stage-1 AUC " + fmt("%.4f", min1) +
                    ", min stage-2 AUC " + fmt("%.4f", min2) + ", max momentum error " + fmt("%.2e", worst_m)};
}

Outcome ac4_determinism_and_range() {
  std::size_t checked = 0, identity_checked = 0;
  std::vector<std::string> bad;
  for (Operator op : all_operators()) {
    for (int sev = kMinSeverity; sev <= kMaxSeverity; ++sev) {
      for (std::size_t i = 0; i < corpus().size(); ++i) {
        const DistortionSpec spec = make_spec(op, sev, image_seed(i));
        const ImageBuffer a = apply(spec, corpus()[i]);
        const ImageBuffer b = apply(spec, corpus()[i]);
        bool ok = bitwise_equal(a, b) && a.same_shape(corpus()[i]);
        for (float v : a.samples()) ok = ok && v >= 0.0f && v <= 1.0f;
        if (!ok) bad.push_back(std::string(operator_name(op)) + "@" + std::to_string(sev));
        ++checked;
      }
    }
    if (const auto params = identity_params(op)) {
      const DistortionSpec spec{op, 1, *params, 1};
      for (std::size_t i = 0; i < corpus().size(); ++i) {
        const ImageBuffer out = apply(spec, corpus()[i]);
        const bool ok = operator_info(op).resampling ? max_abs_diff(out, corpus()[i]) <= 1e-6
                                                     : bitwise_equal(out, corpus()[i]);
        if (!ok) bad.push_back(std::string(operator_name(op)) + " identity");
        ++identity_checked;
      }
    }
  }
  std::string detail = std::to_string(all_operators().size()) + " operators, " + std::to_string(checked) +
                       " runs, " + std::to_string(identity_checked) + " identity checks";
  if (!bad.empty()) detail += "; first failure " + bad.front();
  return {bad.empty(), detail};
}

double spearman(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      less += values[j] < values[i];
      equal += values[j] == values[i];
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double mean = (static_cast<double>(n) + 1.0) / 2.0, sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) - mean, y = rank[i] - mean;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  return sxy / std::sqrt(sxx * syy);
}

Outcome ac5_severity_monotonicity() {
  std::size_t checked = 0;
  std::vector<std::string> bad;
  for (Operator op : all_operators()) {
    const Category c = operator_info(op).category;
    if (c != Category::Noise && c != Category::Blur && c != Category::Compression) continue;
    std::vector<double> means;
    for (int sev = kMinSeverity; sev <= kMaxSeverity; ++sev) {
      double sum = 0.0;
      for (std::size_t i = 0; i < corpus().size(); ++i) {
        sum += psnr(apply(make_spec(op, sev, image_seed(i)), corpus()[i]), corpus()[i]);
      }
      means.push_back(sum / static_cast<double>(corpus().size()));
    }
    if (spearman(means) != -1.0) bad.push_back(std::string(operator_name(op)));
    ++checked;
  }
  std::string detail = std::to_string(checked) + " noise/blur/compression operators";
  if (!bad.empty()) detail += "; not strictly decreasing: " + bad.front();
  return {bad.empty() && checked > 0, detail};
}

Outcome ac6_mixing_fairness() {
  SeededRng rng(2024);
  const int n = 100000;
  int official = 0;
  for (int i = 0; i < n; ++i) {
    const auto spec = sample_spec(rng, PipelineMode::MixedEqual);
    official += spec && operator_info(spec->op).catalog == Catalog::Official;
  }
  const double fraction = official / static_cast<double>(n);
  return {fraction >= 0.49 && fraction <= 0.51, fmt("official fraction %.5f over 100000 draws", fraction)};
}

double brute_force_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Outcome ac7_auc_oracle() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    SeededRng rng(mix64(0xAC7, k));
    const std::size_t n = 2 + rng.below(499);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = rng.bernoulli(0.5) ? std::round(rng.uniform() * 8.0) / 8.0 : rng.normal() + 0.4 * y[i];
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(roc_auc(s, y) - brute_force_auc(s, y)));
  }
  const double example = roc_auc(std::vector<double>{0.1, 0.4, 0.3, 0.9}, std::vector<int>{0, 0, 1, 1});
  return {worst <= 1e-12 && example == 0.75, fmt("200 instances, max |sort - brute| %.2e", worst) + fmt(", example %.17g", example)};
}

Outcome ac8_ensemble_contract() {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  SeededRng rng(0xAC8);
  EnsembleConfig cfg;
  for (int k = 0; k < 4; ++k) {
    EmbeddingTable table{3, 6, {}};
    for (const auto& id : ids) {
      std::vector<float> row(18);
      for (float& v : row) v = static_cast<float>(rng.normal());
      table.rows[id] = row;
    }
    Checkpoint ckpt;
    ckpt.head.weights = testsupport::random_vector(6, rng);
    ckpt.head.bias = rng.normal();
    ckpt.projector = Matrix::Identity(6, 6) + testsupport::random_matrix(6, 6, rng, 0.2);
    cfg.experts.push_back({"e" + std::to_string(k), default_profile(ExpertKind::SyntheticA),
                           std::make_shared<EmbeddingExtractor>(table, "t"), ckpt});
  }
  EnsembleConfig permuted = cfg;
  std::rotate(permuted.experts.begin(), permuted.experts.begin() + 1, permuted.experts.end());
  std::swap(permuted.experts[0], permuted.experts[2]);
  double worst_mean = 0.0, worst_perm = 0.0;
  bool bounded = true;
  for (const auto& id : ids) {
    const Prediction p = ensemble_predict(cfg, nullptr, id);
    double sum = 0.0;
    for (double v : p.per_expert) sum += v;
    worst_mean = std::max(worst_mean, std::abs(p.p_final - sum / static_cast<double>(p.per_expert.size())));
    worst_perm = std::max(worst_perm, std::abs(ensemble_predict(permuted, nullptr, id).p_final - p.p_final));
    bounded = bounded && p.p_final >= *std::min_element(p.per_expert.begin(), p.per_expert.end()) &&
              p.p_final <= *std::max_element(p.per_expert.begin(), p.per_expert.end());
  }
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> probs(1 + rng.below(8));
    for (double& v : probs) v = rng.uniform();
    double sum = 0.0;
    for (double v : probs) sum += v;
    const double v = soft_vote(probs);
    worst_mean = std::max(worst_mean, std::abs(v - sum / static_cast<double>(probs.size())));
    bounded = bounded && v >= *std::min_element(probs.begin(), probs.end()) && v <= *std::max_element(probs.begin(), probs.end());
    std::reverse(probs.begin(), probs.end());
    worst_perm = std::max(worst_perm, std::abs(soft_vote(probs) - v));
  }
  const double example = soft_vote(std::vector<double>{0.2, 0.4, 0.6, 0.8});
  const bool pass = worst_mean <= 1e-12 && worst_perm <= 1e-12 && bounded && std::abs(example - 0.5) <= 1e-12;
  return {pass, fmt("max |p_final - mean| %.2e", worst_mean) + fmt(", max permutation delta %.2e", worst_perm) +
                    fmt(", [0.2,0.4,0.6,0.8] -> %.17g", example)};
}

double distorted_auc(const ToyFeatureWorld& world, const Checkpoint& ckpt, std::uint64_t seed, int n) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    SeededRng rng(mix64(seed, static_cast<std::uint64_t>(i)));
    const auto spec = sample_spec(rng, PipelineMode::MixedEqual);
    scores.push_back(predict(ckpt, world.sample(1000000 + static_cast<std::uint64_t>(i), y, spec)));
    labels.push_back(y);
  }
  return roc_auc(scores, labels);
}

Outcome ac9_robustness_direction() {
  TrainConfig cfg;
  cfg.teacher_mode = TeacherMode::Momentum;
  cfg.normalize_distill = true;
  std::ostringstream per_seed;
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ToyFeatureWorld world(ToyWorldParams{}, 100 + s);
    double auc[2];
    for (int m = 0; m < 2; ++m) {
      const ToyBatchSource source(world, alternating_labels(512), 32, m ? PipelineMode::MixedEqual : PipelineMode::Clean,
                                  7 + s);
      TrainConfig seeded = cfg;
      seeded.seed = 7 + s;
      const StageResult s1 = train_stage1(seeded, source);
      const StageResult s2 = train_stage2(seeded, source, s1.checkpoint);
      auc[m] = distorted_auc(world, s2.checkpoint, 555 + s, 2000);
    }
    sum += auc[1] - auc[0];
    per_seed << (s ? " " : "") << fmt("%+.4f", auc[1] - auc[0]);
  }
  const double margin = sum / 5.0;
  return {margin >= 0.02, fmt("mean AUC margin mixed - clean %.4f", margin) + " (per seed " + per_seed.str() + ")"};
}

const char* kImageConfig = R"({
  "manifest": "manifest.jsonl", "output_dir": "run", "seed": 11, "pipeline_mode": "mixed", "batch_size": 8,
  "train": {"stage1_epochs": 1, "stage2_epochs": 1, "teacher_mode": "momentum", "normalize_distill": true,
            "queue_capacity": 64},
  "experts": [
    {"name": "syn_a", "kind": "synthetic_a", "seed": 1, "extractor": {"type": "synthetic", "seed": 5, "dim": 16}},
    {"name": "syn_b", "kind": "synthetic_b", "seed": 2, "extractor": {"type": "synthetic", "seed": 6, "dim": 16}}
  ],
  "toy": {"items": 48, "train_items": 32, "image_side": 48}
})";

// distort -> train -> infer -> eval; each stage writes into its own subtree.
void full_pipeline(const fs::path& config, const fs::path& dir, std::size_t jobs) {
  const RunConfig cfg = load_run_config(run_prepare(config, dir / "prepared", jobs).config_path);
  run_distort(dir / "prepared" / "images", dir / "distorted", PipelineMode::MixedEqual, cfg.seed, 2, jobs);
  run_train(cfg, jobs);
  run_infer(cfg, cfg.manifest, std::nullopt, dir / "predictions.csv", jobs);
  run_eval(dir / "predictions.csv", cfg.manifest, dir / "report.json");
}

Outcome ac10_reproducibility() {
  testsupport::TempDir dir("acceptance_ac10");
  testsupport::write_file(dir / "image_config.json", kImageConfig);
  const std::vector<fs::path> configs{fs::path(FEATDISTILL_SOURCE_DIR) / "configs" / "toy.json", dir / "image_config.json"};
  const std::vector<std::pair<std::string, std::size_t>> runs{{"jobs1", 1}, {"rerun1", 1}, {"jobs3", 3}, {"jobs4", 4}};
  std::size_t files = 0;
  std::vector<std::string> bad;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<std::pair<std::string, std::uint64_t>> reference;
    for (const auto& [name, jobs] : runs) {
      const fs::path root = dir / ("c" + std::to_string(c)) / name;
      full_pipeline(configs[c], root, jobs);
      const auto hashes = testsupport::tree_hashes(root);
      if (reference.empty()) {
        reference = hashes;
        files += hashes.size();
      } else if (hashes != reference) {
        bad.push_back(configs[c].filename().string() + " " + name);
      }
    }
  }
  std::string detail = std::to_string(configs.size()) + " configs x " + std::to_string(runs.size()) +
                       " runs (jobs 1, 1, 3, 4), " + std::to_string(files) + " artifacts per run set";
  if (!bad.empty()) detail += "; mismatch in " + bad.front();
  return {bad.empty() && files > 0, detail};
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  set_log_threshold(LogLevel::Error);
  const std::vector<Criterion> criteria{
      {"AC1", "equation fidelity", 1.0, ac1_equation_fidelity},
      {"AC2", "gradient suite", 10.0, ac2_gradients},
      {"AC3", "toy end-to-end", 60.0, ac3_toy_end_to_end},
      {"AC4", "degradation determinism and range", 120.0, ac4_determinism_and_range},
      {"AC5", "severity monotonicity", 300.0, ac5_severity_monotonicity},
      {"AC6", "mixing fairness", 5.0, ac6_mixing_fairness},
      {"AC7", "AUC oracle equivalence", 10.0, ac7_auc_oracle},
      {"AC8", "ensemble contract", 1.0, ac8_ensemble_contract},
      {"AC9", "robustness direction", 300.0, ac9_robustness_direction},
      {"AC10", "reproducibility", 0.0, ac10_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = outcome.pass;
    std::string timing = fmt("%.2f s", seconds);
    if (c.budget_s > 0.0) {
      timing += fmt(" of %.0f s budget", c.budget_s);
      if (seconds >= c.budget_s) pass = false;
    }
    std::printf("%s %s %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failures += !pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
