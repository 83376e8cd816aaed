#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "featdistill/errors.hpp"
#include "featdistill/log.hpp"
#include "featdistill/pipeline.hpp"

namespace fd = featdistill;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kUsage = 2;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const fd::InvalidArgument& e) {
    fd::log_error(e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fd::log_error(e.what());
    return kPartial;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"featdistill: degradation library, two-stage distillation training and ensemble evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "featdistill 0.1.0");

  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  int code = kOk;

  auto* distort = app.add_subcommand("distort", "Write degraded copies of every image in a directory");
  std::string in_dir, out_dir, mode = "mixed";
  std::size_t count = 1;
  std::uint64_t distort_seed = 0;
  distort->add_option("--in", in_dir, "Input image directory")->required();
  distort->add_option("--out", out_dir, "Output directory")->required();
  distort->add_option("--mode", mode, "Pipeline mode")
      ->check(CLI::IsMember({"clean", "official", "extended", "mixed"}))
      ->capture_default_str();
  distort->add_option("--seed", distort_seed, "Root seed")->capture_default_str();
  distort->add_option("--count", count, "Degraded copies per image")->check(CLI::PositiveNumber)->capture_default_str();
  distort->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  distort->callback([&] {
    code = run_guarded([&] {
      const auto summary = fd::run_distort(in_dir, out_dir, fd::parse_pipeline_mode(mode), distort_seed, count, jobs);
      std::cout << "wrote " << summary.written << " images, " << summary.failed.size() << " inputs failed\n";
      return summary.written == 0 && !summary.failed.empty() ? kPartial : kOk;
    });
  });

  auto* prepare = app.add_subcommand("prepare", "Generate the toy corpus, manifest and embeddings for a config");
  std::string config_path, prepare_out;
  prepare->add_option("--config", config_path, "Config with a toy block")->required();
  prepare->add_option("--out", prepare_out, "Output directory")->required();
  prepare->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  prepare->callback([&] {
    code = run_guarded([&] {
      const auto s = fd::run_prepare(config_path, prepare_out, jobs);
      std::cout << "prepared " << s.items << " items and " << s.embedding_files << " embedding files; config "
                << s.config_path.string() << "\n";
      return kOk;
    });
  });

  auto* train = app.add_subcommand("train", "Run stage-1 and stage-2 training for every expert");
  train->add_option("--config", config_path, "Run config")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  train->callback([&] {
    code = run_guarded([&] {
      fd::RunConfig config = fd::load_run_config(config_path);
      if (seed) config.seed = *seed;
      for (const auto& r : fd::run_train(config, jobs)) {
        std::cout << r.name << ": stage1 train AUC " << r.stage1_train_auc << ", stage2 train AUC "
                  << r.stage2_train_auc << "\n";
      }
      return kOk;
    });
  });

  auto* infer = app.add_subcommand("infer", "Write ensemble predictions for a manifest");
  std::string manifest, split, out_csv;
  infer->add_option("--config", config_path, "Run config")->required();
  infer->add_option("--manifest", manifest, "Manifest (default: the config's)");
  infer->add_option("--split", split, "Only records of this split")
      ->check(CLI::IsMember({"train", "val", "hardval", "test"}));
  infer->add_option("--out", out_csv, "Predictions CSV")->required();
  infer->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  infer->callback([&] {
    code = run_guarded([&] {
      const fd::RunConfig config = fd::load_run_config(config_path);
      std::optional<fd::Split> only;
      if (!split.empty()) only = fd::parse_split(split);
      const auto s = fd::run_infer(config, manifest.empty() ? config.manifest : std::filesystem::path(manifest), only,
                                   out_csv, jobs);
      std::cout << "predicted " << s.predictions.size() << " items, skipped " << s.failed.size() << "\n";
      return s.failed.empty() ? kOk : kPartial;
    });
  });

  auto* eval = app.add_subcommand("eval", "Compute overall and per-distortion ROC AUC");
  std::string predictions, report;
  eval->add_option("--predictions", predictions, "Predictions CSV")->required();
  eval->add_option("--manifest", manifest, "Manifest with labels")->required();
  eval->add_option("--report", report, "Report JSON path (a .txt table is written next to it)")->required();
  eval->callback([&] {
    code = run_guarded([&] {
      const auto r = fd::run_eval(predictions, manifest, report);
      std::cout << fd::report_table(r);
      return kOk;
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  return code;
}
