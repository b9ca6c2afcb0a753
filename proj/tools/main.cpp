// Command-line experiment runner: ingest/train/evaluate/sweep/analyze.

#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toxattn/experiment.hpp"

namespace {

using nlohmann::json;
using namespace toxattn;

// Distinguishes bad configuration (exit 1) from bad data (exit 2).
struct CliConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string corpus;
  std::string out;
  std::string checkpoint;
  std::string attention = "normal";
  std::string normal_attention = "uniform";
  std::string split = "test";
  std::vector<double> lambdas{1.0};
  double lambda = 1.0;
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 16;
  std::uint64_t seed = 42;
  int dim = 16;
  int k = 5;
  bool mask = false;
  std::string lexicon;
  std::string mask_token = "[UNK]";
  std::string mask_apply = "train_only";
};

template <typename T>
T parse_enum(const std::string& value, std::optional<T> (*parser)(std::string_view),
             const std::string& flag) {
  auto parsed = parser(value);
  if (!parsed) {
    throw CliConfigError("config error: bad value '" + value + "' for " + flag);
  }
  return *parsed;
}

ExperimentConfig to_experiment_config(const Options& o) {
  ExperimentConfig cfg;
  cfg.corpus_path = o.corpus;
  cfg.out_dir = o.out;
  cfg.lambda_grid = o.lambdas;
  cfg.k = o.k;
  cfg.eval_split = parse_enum<Split>(o.split, split_from_string, "--split");
  cfg.mask = o.mask;
  cfg.lexicon_path = o.lexicon;
  cfg.mask_config.mask_token = o.mask_token;
  cfg.mask_config.apply_to =
      parse_enum<MaskApplyTo>(o.mask_apply, mask_apply_from_string, "--mask-apply");
  cfg.train.strategy =
      parse_enum<AttentionStrategy>(o.attention, strategy_from_string, "--attention");
  cfg.train.normal_attention = parse_enum<NormalAttentionMode>(
      o.normal_attention, normal_attention_from_string, "--normal-attention");
  cfg.train.learning_rate = o.learning_rate;
  cfg.train.epochs = o.epochs;
  cfg.train.batch_size = o.batch_size;
  cfg.train.seed = o.seed;
  cfg.train.embedding_dim = o.dim;
  cfg.train.mask_token = o.mask_token;
  return cfg;
}

void require_valid(const ExperimentConfig& cfg) {
  const auto errors = validate_config(cfg);
  if (errors.empty()) return;
  for (const std::string& e : errors) std::cerr << "config error: " << e << "\n";
  throw CliConfigError("invalid configuration");
}

Corpus load_for_eval(const Options& o, MaskSummary* mask_summary = nullptr) {
  Corpus corpus = load_corpus(o.corpus);
  if (o.mask) {
    if (o.lexicon.empty()) {
      throw CliConfigError("config error: --lexicon required with --mask");
    }
    MaskConfig mc;
    mc.mask_token = o.mask_token;
    mc.apply_to = parse_enum<MaskApplyTo>(o.mask_apply, mask_apply_from_string, "--mask-apply");
    corpus = mask_corpus(corpus, CommunityLexicon::load(o.lexicon), mc, mask_summary);
  }
  return corpus;
}

json error_analysis_json(const ErrorAnalysis& a) {
  json confusion = json::array();
  for (int g = 0; g < kNumLabels; ++g) {
    json row = json::array();
    for (int p = 0; p < kNumLabels; ++p) row.push_back(a.confusion(g, p));
    confusion.push_back(std::move(row));
  }
  json communities = json::object();
  for (const auto& [c, n] : a.per_community_misclassifications) communities[c] = n;
  json top = json::array();
  for (const auto& [c, n] : a.top_communities) {
    top.push_back({{"community", c}, {"misclassified", n}});
  }
  return json{{"confusion_matrix", confusion},
              {"label_order", {"hatespeech", "offensive", "normal"}},
              {"per_community_misclassifications", communities},
              {"top_communities", top},
              {"per_class_misclassified",
               {{"hatespeech", a.per_class_misclassified[0]},
                {"offensive", a.per_class_misclassified[1]},
                {"normal", a.per_class_misclassified[2]}}},
              {"counting_rule",
               "a misclassified post increments every community in its gold targets"}};
}

void cmd_ingest(const Options& o) {
  LoadSummary summary;
  load_corpus(o.corpus, &summary);
  json issues = json::array();
  for (const LoadIssue& issue : summary.issues) {
    issues.push_back({{"id", issue.post_id}, {"reason", issue.reason}});
  }
  json j{{"total", summary.total},
         {"loaded", summary.loaded},
         {"excluded_invalid", summary.excluded_invalid},
         {"excluded_no_majority", summary.excluded_no_majority},
         {"flagged_no_rationale_signal", summary.flagged_no_rationale_signal},
         {"issues", issues}};
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    write_text_atomic(std::filesystem::path(o.out) / "load_summary.json",
                      j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
}

void cmd_train(const Options& o) {
  ExperimentConfig cfg = to_experiment_config(o);
  cfg.lambda_grid = {o.lambda};
  require_valid(cfg);

  Corpus corpus = load_for_eval(o);
  TrainConfig tc = cfg.train;
  tc.lambda = o.lambda;
  TrainTrace trace;
  ModelParams params = train(corpus, tc, &trace);

  std::filesystem::create_directories(cfg.out_dir);
  save_checkpoint(cfg.out_dir / "checkpoint.json", params, tc);
  std::string loss_csv = "epoch,pred,att,total\n";
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
    const LossBreakdown& lb = trace.epoch_loss[e];
    loss_csv += std::to_string(e) + ',' + format_double(lb.pred) + ',' +
                format_double(lb.att) + ',' + format_double(lb.total) + '\n';
  }
  write_text_atomic(cfg.out_dir / "train_loss.csv", loss_csv);
  std::cout << "checkpoint written to " << (cfg.out_dir / "checkpoint.json").string()
            << "\n";
}

void cmd_evaluate(const Options& o) {
  if (o.checkpoint.empty()) {
    throw CliConfigError("config error: --checkpoint required");
  }
  if (o.out.empty()) {
    throw CliConfigError("config error: --out required");
  }
  Checkpoint ckpt = load_checkpoint(o.checkpoint);
  Corpus corpus = load_for_eval(o);

  EvalConfig ec;
  ec.strategy = ckpt.config.strategy;
  ec.normal_attention = ckpt.config.normal_attention;
  ec.lambda = ckpt.config.lambda;
  ec.k = o.k;
  const Split split = parse_enum<Split>(o.split, split_from_string, "--split");
  EvalReport report = evaluate(ckpt.params, corpus, split, ec);

  std::filesystem::create_directories(o.out);
  const std::filesystem::path out(o.out);
  json j = report_to_json(report);
  j["lambda"] = ckpt.config.lambda;
  j["split"] = o.split;
  write_text_atomic(out / "report.json", j.dump(2) + "\n");
  const std::vector<LambdaReport> rows{{ckpt.config.lambda, report}};
  write_text_atomic(out / "performance.csv", performance_csv(rows));
  write_text_atomic(out / "bias.csv", bias_csv(rows));
  write_text_atomic(out / "explainability.csv", explainability_csv(rows));
  write_text_atomic(out / "bias_by_community.csv", bias_by_community_csv(rows));
  std::cout << performance_csv(rows);
}

void cmd_sweep(const Options& o) {
  ExperimentConfig cfg = to_experiment_config(o);
  require_valid(cfg);
  const auto rows = sweep(cfg);
  std::cout << performance_csv(rows);
}

void cmd_analyze(const Options& o) {
  if (o.checkpoint.empty()) {
    throw CliConfigError("config error: --checkpoint required");
  }
  if (o.out.empty()) {
    throw CliConfigError("config error: --out required");
  }
  Checkpoint ckpt = load_checkpoint(o.checkpoint);
  Corpus corpus = load_for_eval(o);
  const Split split = parse_enum<Split>(o.split, split_from_string, "--split");
  ErrorAnalysis analysis = error_analysis(ckpt.params, corpus, split);

  std::filesystem::create_directories(o.out);
  const std::filesystem::path out(o.out);
  write_text_atomic(out / "confusion_matrix.csv", confusion_matrix_csv(analysis));
  write_text_atomic(out / "community_misclassifications.csv",
                    community_misclassifications_csv(analysis));
  write_text_atomic(out / "class_misclassifications.csv",
                    class_misclassifications_csv(analysis));
  write_text_atomic(out / "error_analysis.json",
                    error_analysis_json(analysis).dump(2) + "\n");
  std::cout << confusion_matrix_csv(analysis);
}

void add_data_flags(CLI::App* sub, Options& o, bool corpus_required = true) {
  auto* corpus = sub->add_option("--corpus", o.corpus, "corpus JSON file");
  if (corpus_required) corpus->required();
  sub->set_config("--config", "", "config file with key=value pairs (flags override)");
}

void add_mask_flags(CLI::App* sub, Options& o) {
  sub->add_flag("--mask", o.mask, "mask community terms");
  sub->add_option("--lexicon", o.lexicon, "community lexicon JSON");
  sub->add_option("--mask-token", o.mask_token, "replacement token (default [UNK])");
  sub->add_option("--mask-apply", o.mask_apply, "train_only|train_and_eval")
      ->check(CLI::IsMember({"train_only", "train_and_eval"}));
}

void add_train_flags(CLI::App* sub, Options& o) {
  sub->add_option("--attention", o.attention, "normal|conservative|lenient")
      ->check(CLI::IsMember({"normal", "conservative", "lenient"}));
  sub->add_option("--normal-attention", o.normal_attention,
                  "attention target for normal-gold posts: uniform|skip")
      ->check(CLI::IsMember({"uniform", "skip"}));
  sub->add_option("--lr", o.learning_rate, "learning rate");
  sub->add_option("--epochs", o.epochs, "training epochs");
  sub->add_option("--batch-size", o.batch_size, "mini-batch size");
  sub->add_option("--seed", o.seed, "rng seed");
  sub->add_option("--dim", o.dim, "embedding width");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-supervised toxicity classification pipeline"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "validate a corpus and print a load summary");
  add_data_flags(ingest, o);
  ingest->add_option("--out", o.out, "directory for load_summary.json");
  ingest->callback([&] { cmd_ingest(o); });

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_data_flags(train_cmd, o);
  train_cmd->add_option("--out", o.out, "output directory")->required();
  train_cmd->add_option("--lambda", o.lambda, "attention-loss weight");
  add_train_flags(train_cmd, o);
  add_mask_flags(train_cmd, o);
  train_cmd->callback([&] { cmd_train(o); });

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  add_data_flags(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint JSON")->required();
  eval_cmd->add_option("--out", o.out, "output directory")->required();
  eval_cmd->add_option("--split", o.split, "train|val|test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--k", o.k, "discrete rationale size");
  add_mask_flags(eval_cmd, o);
  eval_cmd->callback([&] { cmd_evaluate(o); });

  auto* sweep_cmd = app.add_subcommand("sweep", "run the pipeline for each lambda");
  add_data_flags(sweep_cmd, o);
  sweep_cmd->add_option("--out", o.out, "output directory")->required();
  sweep_cmd->add_option("--lambda", o.lambdas, "lambda grid, e.g. 0.001,1,10,100")
      ->delimiter(',');
  sweep_cmd->add_option("--k", o.k, "discrete rationale size");
  sweep_cmd->add_option("--split", o.split, "evaluation split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  add_train_flags(sweep_cmd, o);
  add_mask_flags(sweep_cmd, o);
  sweep_cmd->callback([&] { cmd_sweep(o); });

  auto* analyze_cmd = app.add_subcommand("analyze", "confusion and misclassification tables");
  add_data_flags(analyze_cmd, o);
  analyze_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint JSON")->required();
  analyze_cmd->add_option("--out", o.out, "output directory")->required();
  analyze_cmd->add_option("--split", o.split, "train|val|test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  add_mask_flags(analyze_cmd, o);
  analyze_cmd->callback([&] { cmd_analyze(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const CliConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const CorpusError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
