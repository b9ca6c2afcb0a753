#include "toxattn/experiment.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace toxattn {

namespace {
using nlohmann::json;
}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& config) {
  std::vector<std::string> errors;
  if (config.corpus_path.empty()) errors.push_back("corpus_path: required");
  if (config.out_dir.empty()) errors.push_back("out_dir: required");
  if (config.lambda_grid.empty()) errors.push_back("lambda_grid: must be non-empty");
  for (double l : config.lambda_grid) {
    if (!(l >= 0.0)) {
      errors.push_back("lambda_grid: values must be >= 0");
      break;
    }
  }
  if (!(config.train.learning_rate > 0.0)) {
    errors.push_back("learning_rate: must be > 0");
  }
  if (config.train.epochs < 0) errors.push_back("epochs: must be >= 0");
  if (config.train.batch_size <= 0) errors.push_back("batch_size: must be > 0");
  if (config.train.embedding_dim <= 0) errors.push_back("embedding_dim: must be > 0");
  if (config.k <= 0) errors.push_back("k: must be > 0");
  if (config.train.mask_token.empty()) errors.push_back("mask_token: must be non-empty");
  if (config.mask && config.lexicon_path.empty()) {
    errors.push_back("lexicon_path: required when masking is enabled");
  }
  return errors;
}

ErrorAnalysis error_analysis(const ModelParams& params, const Corpus& corpus,
                             Split split) {
  const std::vector<std::size_t>& idx = corpus.indices_of(split);
  if (idx.empty()) {
    throw std::invalid_argument("error_analysis: empty split");
  }

  ErrorAnalysis out;
  for (std::size_t i : idx) {
    const ResolvedPost& rp = corpus.posts()[i];
    const Prediction pred = forward(params, rp.post.tokens);
    Eigen::Index cls = 0;
    pred.probs.maxCoeff(&cls);
    const int gold = static_cast<int>(rp.gold_label);
    ++out.confusion(gold, cls);
    if (cls != gold) {
      ++out.per_class_misclassified[static_cast<std::size_t>(gold)];
      for (const std::string& community : rp.gold_targets) {
        ++out.per_community_misclassifications[community];
      }
    }
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(
      out.per_community_misclassifications.begin(),
      out.per_community_misclassifications.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > 10) ranked.resize(10);
  out.top_communities = std::move(ranked);
  return out;
}

std::string confusion_matrix_csv(const ErrorAnalysis& analysis) {
  std::string out = "gold,pred_hatespeech,pred_offensive,pred_normal\n";
  for (int g = 0; g < kNumLabels; ++g) {
    out += std::string(to_string(static_cast<Label>(g)));
    for (int p = 0; p < kNumLabels; ++p) {
      out += ',' + std::to_string(analysis.confusion(g, p));
    }
    out += '\n';
  }
  return out;
}

std::string community_misclassifications_csv(const ErrorAnalysis& analysis) {
  std::vector<std::pair<std::string, std::size_t>> ranked(
      analysis.per_community_misclassifications.begin(),
      analysis.per_community_misclassifications.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::string out = "community,misclassified\n";
  for (const auto& [community, count] : ranked) {
    std::string escaped = community;
    if (escaped.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : escaped) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      escaped = quoted + '"';
    }
    out += escaped + ',' + std::to_string(count) + '\n';
  }
  return out;
}

std::string class_misclassifications_csv(const ErrorAnalysis& analysis) {
  std::string out = "gold_class,misclassified\n";
  for (int g = 0; g < kNumLabels; ++g) {
    out += std::string(to_string(static_cast<Label>(g))) + ',' +
           std::to_string(analysis.per_class_misclassified[static_cast<std::size_t>(g)]) +
           '\n';
  }
  return out;
}

namespace {

json config_echo(const ExperimentConfig& config, double lambda) {
  return json{{"corpus", config.corpus_path.string()},
              {"eval_split", std::string(to_string(config.eval_split))},
              {"strategy", std::string(to_string(config.train.strategy))},
              {"normal_attention", std::string(to_string(config.train.normal_attention))},
              {"lambda", lambda},
              {"learning_rate", config.train.learning_rate},
              {"epochs", config.train.epochs},
              {"batch_size", config.train.batch_size},
              {"seed", config.train.seed},
              {"embedding_dim", config.train.embedding_dim},
              {"k", config.k},
              {"mask", config.mask},
              {"lexicon", config.lexicon_path.string()},
              {"mask_token", config.mask_config.mask_token},
              {"mask_apply_to", std::string(to_string(config.mask_config.apply_to))}};
}

json summary_json(const LoadSummary& load, const MaskSummary& mask, bool masked) {
  json issues = json::array();
  for (const LoadIssue& issue : load.issues) {
    issues.push_back({{"id", issue.post_id}, {"reason", issue.reason}});
  }
  json j{{"load",
          {{"total", load.total},
           {"loaded", load.loaded},
           {"excluded_invalid", load.excluded_invalid},
           {"excluded_no_majority", load.excluded_no_majority},
           {"flagged_no_rationale_signal", load.flagged_no_rationale_signal},
           {"issues", issues}}}};
  if (masked) {
    j["mask"] = {{"train", mask.masked_by_split[0]},
                 {"val", mask.masked_by_split[1]},
                 {"test", mask.masked_by_split[2]},
                 {"total", mask.total()}};
  }
  return j;
}

void write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config,
                         const RunResult& result, double lambda) {
  std::filesystem::create_directories(dir);

  save_checkpoint(dir / "checkpoint.json", result.params, result.train_config);

  json report = report_to_json(result.report);
  report["config"] = config_echo(config, lambda);
  report["summary"] = summary_json(result.load_summary, result.mask_summary, config.mask);
  write_text_atomic(dir / "report.json", report.dump(2) + "\n");

  const LambdaReport row{lambda, result.report};
  const std::vector<LambdaReport> rows{row};
  write_text_atomic(dir / "performance.csv", performance_csv(rows));
  write_text_atomic(dir / "bias.csv", bias_csv(rows));
  write_text_atomic(dir / "explainability.csv", explainability_csv(rows));
  write_text_atomic(dir / "bias_by_community.csv", bias_by_community_csv(rows));
  write_text_atomic(dir / "confusion_matrix.csv", confusion_matrix_csv(result.analysis));
  write_text_atomic(dir / "community_misclassifications.csv",
                    community_misclassifications_csv(result.analysis));
  write_text_atomic(dir / "class_misclassifications.csv",
                    class_misclassifications_csv(result.analysis));
}

RunResult run_one(const ExperimentConfig& config, double lambda) {
  RunResult result;
  Corpus corpus = load_corpus(config.corpus_path, &result.load_summary);

  if (config.mask) {
    const CommunityLexicon lexicon = CommunityLexicon::load(config.lexicon_path);
    corpus = mask_corpus(corpus, lexicon, config.mask_config, &result.mask_summary);
  }

  TrainConfig train_config = config.train;
  train_config.lambda = lambda;
  train_config.mask_token = config.mask_config.mask_token;
  result.train_config = train_config;
  result.params = train(corpus, train_config);

  EvalConfig eval_config;
  eval_config.strategy = train_config.strategy;
  eval_config.normal_attention = train_config.normal_attention;
  eval_config.lambda = lambda;
  eval_config.k = config.k;
  result.report = evaluate(result.params, corpus, config.eval_split, eval_config);
  result.analysis = error_analysis(result.params, corpus, config.eval_split);
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  const auto errors = validate_config(config);
  if (!errors.empty()) {
    std::string joined;
    for (const std::string& e : errors) joined += e + "; ";
    throw std::invalid_argument("invalid config: " + joined);
  }
  const double lambda = config.lambda_grid.front();
  RunResult result = run_one(config, lambda);
  write_run_artifacts(config.out_dir, config, result, lambda);
  return result;
}

std::vector<LambdaReport> sweep(const ExperimentConfig& config) {
  const auto errors = validate_config(config);
  if (!errors.empty()) {
    std::string joined;
    for (const std::string& e : errors) joined += e + "; ";
    throw std::invalid_argument("invalid config: " + joined);
  }

  // Ascending unique grid: row order is stable and each lambda's child
  // seed depends only on its rank, not on how the grid was written.
  std::vector<double> grid = config.lambda_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<LambdaReport> rows;
  json sweep_doc = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig child = config;
    child.train.seed = config.train.seed + i;
    child.out_dir = config.out_dir / ("lambda_" + format_double(grid[i]));

    RunResult result = run_one(child, grid[i]);
    write_run_artifacts(child.out_dir, child, result, grid[i]);

    rows.push_back(LambdaReport{grid[i], result.report});
    json entry = report_to_json(result.report);
    entry["lambda"] = grid[i];
    entry["seed"] = child.train.seed;
    sweep_doc.push_back(std::move(entry));
  }

  std::filesystem::create_directories(config.out_dir);
  write_text_atomic(config.out_dir / "performance.csv", performance_csv(rows));
  write_text_atomic(config.out_dir / "bias.csv", bias_csv(rows));
  write_text_atomic(config.out_dir / "explainability.csv", explainability_csv(rows));
  write_text_atomic(config.out_dir / "bias_by_community.csv", bias_by_community_csv(rows));
  write_text_atomic(config.out_dir / "sweep.json", sweep_doc.dump(2) + "\n");
  return rows;
}

}  // namespace toxattn
