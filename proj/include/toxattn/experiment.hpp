#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "toxattn/masking.hpp"
#include "toxattn/metrics.hpp"
#include "toxattn/model.hpp"
#include "toxattn/report.hpp"

namespace toxattn {

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir;
  std::vector<double> lambda_grid{1.0};
  TrainConfig train;
  int k = 5;
  Split eval_split = Split::Test;
  bool mask = false;
  std::filesystem::path lexicon_path;
  MaskConfig mask_config;
};

/// Field-by-field validation; empty result means the config is usable.
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct ErrorAnalysis {
  /// Row = gold label, column = predicted label.
  Eigen::Matrix<std::int64_t, kNumLabels, kNumLabels> confusion =
      Eigen::Matrix<std::int64_t, kNumLabels, kNumLabels>::Zero();
  /// A misclassified post increments every community in its gold_targets.
  std::map<std::string, std::size_t> per_community_misclassifications;
  /// Communities with nonzero counts, count-descending (name ascending
  /// among ties), at most ten entries.
  std::vector<std::pair<std::string, std::size_t>> top_communities;
  /// Misclassified posts per gold class.
  std::array<std::size_t, kNumLabels> per_class_misclassified{};
};

ErrorAnalysis error_analysis(const ModelParams& params, const Corpus& corpus, Split split);

std::string confusion_matrix_csv(const ErrorAnalysis& analysis);
std::string community_misclassifications_csv(const ErrorAnalysis& analysis);
std::string class_misclassifications_csv(const ErrorAnalysis& analysis);

struct RunResult {
  EvalReport report;
  ErrorAnalysis analysis;
  LoadSummary load_summary;
  MaskSummary mask_summary;
  ModelParams params;
  TrainConfig train_config;  // as used, including the effective lambda
};

/// Full pipeline for one lambda: load -> (mask) -> train -> evaluate ->
/// error analysis, with all artifacts written to config.out_dir
/// (checkpoint, report JSON/CSV, error-analysis and plot-data CSVs).
/// Deterministic: identical configs produce byte-identical files.
RunResult run_experiment(const ExperimentConfig& config);

/// One run per lambda in the grid (sorted ascending, deduplicated),
/// with per-run child seed = config seed + grid index. Writes per-run
/// artifacts under lambda_<value>/ plus merged CSV tables and
/// sweep.json in config.out_dir.
std::vector<LambdaReport> sweep(const ExperimentConfig& config);

}  // namespace toxattn
