// Acceptance suite. Each criterion prints one PASS/FAIL line; the
// process exits nonzero if any criterion fails. Criteria also enforce
// their own wall-clock budgets.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "support/builders.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "toxattn/experiment.hpp"
#include "toxattn/numerics.hpp"

using namespace toxattn;

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

struct Criterion {
  std::string name;
  double budget_seconds;
  bool ok = true;
  std::string detail;
  Clock::time_point start = Clock::now();

  Criterion(std::string n, double budget) : name(std::move(n)), budget_seconds(budget) {}

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }

  void finish() {
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (elapsed > budget_seconds) {
      ok = false;
      if (detail.empty()) detail = "over time budget";
    }
    std::printf("[%s] %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), elapsed,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool opt_close(const std::optional<double>& a, const std::optional<double>& b,
               double tol) {
  if (a.has_value() != b.has_value()) return false;
  return !a || close(*a, *b, tol);
}

// ---------------------------------------------------------------------
// 1. Metric-oracle equivalence on random instances.
// ---------------------------------------------------------------------
void criterion_metric_oracles() {
  Criterion c("metric-oracle equivalence (100 random instances, tol 1e-9)", 10.0);
  DeterministicRng rng(101);
  constexpr double tol = 1e-9;
  const std::vector<std::string> communities = {"alpha", "beta", "gamma"};

  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n = 2 + rng.index(49);  // <= 50

    // auroc_binary on tie-heavy scores.
    std::vector<double> scores(n);
    std::vector<std::uint8_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.index(10) / 9.0;
      pos[i] = rng.unit() < 0.5 ? 1 : 0;
    }
    auto lib_auc = auroc_binary(scores, pos);
    auto ref_auc = oracles::auc_pairwise(scores, pos);
    c.require(lib_auc.has_value() == ref_auc.has_value() &&
                  (!lib_auc || close(*lib_auc, *ref_auc, tol)),
              "auroc_binary -- oracle mismatch");

    // Bias slices over a random mini-corpus.
    std::vector<ResolvedPost> posts;
    std::vector<double> tox(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Label gold = static_cast<Label>(rng.index(3));
      std::set<std::string> targets;
      for (const auto& community : communities) {
        if (rng.unit() < 0.35) targets.insert(community);
      }
      RationaleVec rationale = gold == Label::Normal ? RationaleVec{} : RationaleVec{1};
      posts.push_back(builders::resolve_one(builders::make_post(
          "p" + std::to_string(i), {"tok"},
          {builders::annot(gold, rationale, targets),
           builders::annot(gold, rationale, targets),
           builders::annot(gold, rationale, targets)})));
      tox[i] = rng.index(6) / 5.0;
    }
    for (const auto& community : communities) {
      c.require(opt_close(subgroup_auc(community, posts, tox),
                          oracles::subgroup_auc_sets(community, posts, tox), tol),
                "subgroup_auc -- oracle mismatch");
      c.require(opt_close(bpsn_auc(community, posts, tox),
                          oracles::bpsn_auc_sets(community, posts, tox), tol),
                "bpsn_auc -- oracle mismatch");
      c.require(opt_close(bnsp_auc(community, posts, tox),
                          oracles::bnsp_auc_sets(community, posts, tox), tol),
                "bnsp_auc -- oracle mismatch");
    }

    // auprc_soft on pooled tokens.
    std::vector<Eigen::VectorXd> atts;
    std::vector<RationaleVec> bits;
    std::vector<double> pooled;
    std::vector<std::uint8_t> pooled_rel;
    const std::size_t n_posts = 1 + rng.index(5);
    for (std::size_t p = 0; p < n_posts; ++p) {
      const std::size_t len = 1 + rng.index(9);
      Eigen::VectorXd att(static_cast<Eigen::Index>(len));
      RationaleVec gold(len, 0);
      for (std::size_t i = 0; i < len; ++i) {
        att[static_cast<Eigen::Index>(i)] = rng.index(5) / 5.0;
        gold[i] = rng.unit() < 0.45 ? 1 : 0;
        pooled.push_back(att[static_cast<Eigen::Index>(i)]);
        pooled_rel.push_back(gold[i]);
      }
      atts.push_back(att);
      bits.push_back(gold);
    }
    c.require(opt_close(auprc_soft_pooled(atts, bits),
                        oracles::ap_thresholds(pooled, pooled_rel), tol),
              "auprc_soft -- oracle mismatch");

    // Span metrics on random index sets.
    std::vector<std::vector<std::size_t>> pred, gold;
    std::vector<std::set<std::size_t>> pred_sets, gold_sets;
    for (std::size_t p = 0; p < n_posts; ++p) {
      std::vector<std::size_t> pr, go;
      for (std::size_t i = 0; i < 9; ++i) {
        if (rng.unit() < 0.4) pr.push_back(i);
        if (rng.unit() < 0.4) go.push_back(i);
      }
      pred_sets.emplace_back(pr.begin(), pr.end());
      gold_sets.emplace_back(go.begin(), go.end());
      pred.push_back(std::move(pr));
      gold.push_back(std::move(go));
    }
    c.require(close(iou_f1(pred, gold), oracles::iou_f1_sets(pred_sets, gold_sets), tol),
              "iou_f1 -- oracle mismatch");
    c.require(
        close(token_f1(pred, gold), oracles::token_f1_sets(pred_sets, gold_sets), tol),
        "token_f1 -- oracle mismatch");
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.
// ---------------------------------------------------------------------
void criterion_gradients() {
  Criterion c("gradient correctness (20 models, h=1e-5, rel err < 1e-4)", 10.0);
  DeterministicRng rng(202);
  for (int model = 0; model < 20; ++model) {
    const int v = 2 + static_cast<int>(rng.index(4));  // vocab size <= 5 with OOV
    std::vector<std::string> vocab = {"<oov>"};
    for (int i = 1; i < v; ++i) vocab.push_back("t" + std::to_string(i));
    const int dim = 1 + static_cast<int>(rng.index(3));
    ModelParams params = gradcheck::random_params(vocab, dim, rng);
    const auto batch = gradcheck::random_batch(vocab, rng);
    for (double lambda : {0.0, 1.0, 100.0}) {
      const double err = gradcheck::max_gradient_error(params, batch, lambda);
      c.require(err < 1e-4, "max rel err " + std::to_string(err) + " at lambda " +
                                std::to_string(lambda));
    }
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 3. Aggregation properties, exhaustive over length-4 triples.
// ---------------------------------------------------------------------
void criterion_aggregation() {
  Criterion c("aggregation properties (exhaustive 2^12 rationale triples)", 5.0);
  for (unsigned bits = 0; bits < (1u << 12); ++bits) {
    std::vector<RationaleVec> rats(3, RationaleVec(4, 0));
    for (int a = 0; a < 3; ++a) {
      for (int i = 0; i < 4; ++i) {
        rats[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
            (bits >> (a * 4 + i)) & 1u;
      }
    }
    const Eigen::VectorXd conservative =
        combine_rationales(rats, AttentionStrategy::Conservative);
    const Eigen::VectorXd mean = combine_rationales(rats, AttentionStrategy::Normal);
    const Eigen::VectorXd lenient = combine_rationales(rats, AttentionStrategy::Lenient);
    for (int i = 0; i < 4; ++i) {
      if (conservative[i] > 0) {
        c.require(mean[i] > 0, "conservative support escaped mean support");
      }
      c.require((mean[i] > 0) == (lenient[i] > 0),
                "mean and lenient supports differ");
    }

    // Toxic post: targets sum to 1 for every strategy.
    std::vector<AnnotatorRecord> toxic_annotators;
    for (const auto& r : rats) {
      toxic_annotators.push_back(builders::annot(Label::Offensive, r));
    }
    ResolvedPost toxic = builders::resolve_one(
        builders::make_post("t", {"a", "b", "c", "d"}, toxic_annotators));
    for (auto strategy : {AttentionStrategy::Normal, AttentionStrategy::Conservative,
                          AttentionStrategy::Lenient}) {
      const AttentionTarget target = ground_truth_attention(toxic, strategy);
      c.require(std::abs(target.weights.sum() - 1.0) <= 1e-9,
                "attention target does not sum to 1");
      c.require(target.weights.minCoeff() >= 0.0, "negative attention weight");
    }

    // Normal-gold post: deactivation yields the uniform target.
    std::vector<AnnotatorRecord> normal_annotators;
    for (const auto& r : rats) {
      normal_annotators.push_back(builders::annot(Label::Normal, r));
    }
    ResolvedPost normal = builders::resolve_one(
        builders::make_post("n", {"a", "b", "c", "d"}, normal_annotators));
    for (auto strategy : {AttentionStrategy::Normal, AttentionStrategy::Conservative,
                          AttentionStrategy::Lenient}) {
      const AttentionTarget target = ground_truth_attention(normal, strategy);
      c.require((target.weights.array() - 0.25).abs().maxCoeff() <= 1e-12,
                "normal-gold target is not uniform");
    }
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 4. Loss contract across the lambda grid.
// ---------------------------------------------------------------------
void criterion_loss_contract() {
  Criterion c("loss contract l_total = l_pred + lambda*l_att (tol 1e-9)", 5.0);
  DeterministicRng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng.index(10);
    Eigen::VectorXd att_raw(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < att_raw.size(); ++i) att_raw[i] = rng.uniform(-2.0, 2.0);
    Eigen::Vector3d prob_raw(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                             rng.uniform(-2.0, 2.0));
    Prediction pred{softmax(prob_raw), softmax(att_raw)};
    AttentionTarget target = gradcheck::random_target(len, rng);
    const Label gold = static_cast<Label>(rng.index(3));

    for (double lambda : {0.001, 1.0, 10.0, 100.0}) {
      const LossBreakdown lb = loss(pred, gold, target, lambda);
      c.require(std::abs(lb.total - (lb.pred + lambda * lb.att)) <= 1e-9,
                "loss components do not add up");
      c.require(lb.pred >= 0.0 && lb.att >= 0.0, "negative loss component");
    }
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 5. Masking contract on a randomized corpus.
// ---------------------------------------------------------------------
void criterion_masking() {
  Criterion c("masking contract (1000 posts: idempotent, preserving, counted)", 10.0);
  synthetic::GeneratorConfig gen;
  gen.n_posts = 1000;
  gen.seed = 505;
  Corpus corpus = synthetic::make_corpus(gen);

  CommunityLexicon lexicon;
  lexicon.entries = {{"Avaruk", {"avaruk"}},
                     {"Borim", {"borim"}},
                     {"Flora", {"veld", "moss", "fen"}}};
  const MaskConfig config{"[UNK]", MaskApplyTo::TrainAndEval};

  std::size_t expected_hits = 0;
  for (const ResolvedPost& rp : corpus.posts()) {
    for (const std::string& token : rp.post.tokens) {
      if (token == "avaruk" || token == "borim" || token == "veld" || token == "moss" ||
          token == "fen") {
        ++expected_hits;
      }
    }
  }

  MaskSummary summary;
  Corpus masked = mask_corpus(corpus, lexicon, config, &summary);
  c.require(summary.total() == expected_hits, "masked count differs from scan");

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ResolvedPost& before = corpus.posts()[i];
    const ResolvedPost& after = masked.posts()[i];
    c.require(after.post.tokens.size() == before.post.tokens.size(),
              "token count changed");
    c.require(after.gold_label == before.gold_label, "gold label changed");
    c.require(after.gold_targets == before.gold_targets, "gold targets changed");
    c.require(after.gold_rationale_union == before.gold_rationale_union,
              "rationale union changed");
    c.require(after.post.split == before.post.split, "split changed");

    std::size_t again_hits = 0;
    ResolvedPost again = mask_post(after, lexicon, config, &again_hits);
    c.require(again.post.tokens == after.post.tokens, "mask_post is not idempotent");
    c.require(again_hits == 0, "idempotent pass still matched terms");
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 6. End-to-end trends on the synthetic corpus.
// ---------------------------------------------------------------------
void criterion_trends() {
  Criterion c("end-to-end synthetic trends (loss monotone, lambda and masking effects)",
              120.0);
  // Base corpus: toxicity carried by marker tokens, no community decoys.
  synthetic::GeneratorConfig gen;  // 500 posts, shipped default seed 1234
  gen.decoy_in_toxic = 0.0;
  gen.decoy_in_normal = 0.0;
  Corpus corpus = synthetic::make_corpus(gen);

  TrainConfig base;
  base.learning_rate = 0.03;
  base.epochs = 200;
  base.batch_size = 16;
  base.seed = 42;
  base.embedding_dim = 8;

  EvalConfig ec;
  ec.k = 2;

  // (a) + (b): same seed and schedule, lambda 0.001 vs 100.
  TrainConfig low = base;
  low.lambda = 0.001;
  TrainTrace low_trace;
  ModelParams low_model = train(corpus, low, &low_trace);
  for (std::size_t e = 0; e + 1 < std::min<std::size_t>(6, low_trace.epoch_loss.size());
       ++e) {
    c.require(low_trace.epoch_loss[e + 1].total < low_trace.epoch_loss[e].total,
              "training loss not monotone at lambda 0.001 (epoch " + std::to_string(e) +
                  ")");
  }

  TrainConfig high = base;
  high.lambda = 100.0;
  TrainTrace high_trace;
  ModelParams high_model = train(corpus, high, &high_trace);
  for (std::size_t e = 0; e + 1 < std::min<std::size_t>(6, high_trace.epoch_loss.size());
       ++e) {
    c.require(high_trace.epoch_loss[e + 1].total < high_trace.epoch_loss[e].total,
              "training loss not monotone at lambda 100 (epoch " + std::to_string(e) +
                  ")");
  }

  ec.lambda = low.lambda;
  const EvalReport low_report = evaluate(low_model, corpus, Split::Test, ec);
  ec.lambda = high.lambda;
  const EvalReport high_report = evaluate(high_model, corpus, Split::Test, ec);
  c.require(high_report.explainability.token_f1 > low_report.explainability.token_f1,
            "token F1 at lambda 100 (" +
                std::to_string(high_report.explainability.token_f1) +
                ") not above lambda 0.001 (" +
                std::to_string(low_report.explainability.token_f1) + ")");

  // (c): with community-decoy posts in the corpus, masking the decoy
  // community improves its BNSP at the same seed. Run at 100 epochs:
  // the bias shows while the model still generalizes; at full
  // convergence this 500-post corpus is memorized and every slice
  // saturates.
  Corpus decoy_corpus = synthetic::make_corpus(synthetic::GeneratorConfig{});
  CommunityLexicon lexicon;
  lexicon.entries = {{synthetic::kDecoyCommunity, {synthetic::kDecoyTerm}},
                     {synthetic::kOtherCommunity, {synthetic::kOtherTerm}}};
  TrainConfig masked_cfg = base;
  masked_cfg.lambda = 0.001;
  masked_cfg.epochs = 100;
  TrainConfig unmasked_cfg = masked_cfg;

  MaskSummary mask_summary;
  Corpus masked_corpus = mask_corpus(decoy_corpus, lexicon, MaskConfig{}, &mask_summary);
  c.require(mask_summary.total() > 0, "decoy lexicon never matched");

  ModelParams masked_model = train(masked_corpus, masked_cfg);
  ModelParams unmasked_model = train(decoy_corpus, unmasked_cfg);

  ec.lambda = masked_cfg.lambda;
  const EvalReport masked_report = evaluate(masked_model, masked_corpus, Split::Test, ec);
  const EvalReport unmasked_report =
      evaluate(unmasked_model, decoy_corpus, Split::Test, ec);
  const auto masked_bnsp =
      masked_report.bias.per_community.at(synthetic::kDecoyCommunity).bnsp_auc;
  const auto unmasked_bnsp =
      unmasked_report.bias.per_community.at(synthetic::kDecoyCommunity).bnsp_auc;
  c.require(masked_bnsp.has_value() && unmasked_bnsp.has_value(),
            "decoy BNSP undefined");
  if (masked_bnsp && unmasked_bnsp) {
    c.require(*masked_bnsp > *unmasked_bnsp,
              "masked BNSP " + std::to_string(*masked_bnsp) + " not above unmasked " +
                  std::to_string(*unmasked_bnsp));
  }
  c.finish();
}

// ---------------------------------------------------------------------
// 7. Sweep determinism: byte-identical artifacts.
// ---------------------------------------------------------------------
void criterion_determinism() {
  Criterion c("sweep determinism (byte-identical report files)", 60.0);
  synthetic::GeneratorConfig gen;
  gen.n_posts = 120;
  gen.seed = 707;
  const auto corpus_path =
      builders::write_corpus_json(synthetic::make_corpus(gen), "acceptance_corpus.json");

  auto run = [&](const fs::path& out) {
    ExperimentConfig cfg;
    cfg.corpus_path = corpus_path;
    cfg.out_dir = out;
    cfg.lambda_grid = {0.001, 1.0, 10.0, 100.0};
    cfg.train.epochs = 2;
    cfg.train.embedding_dim = 4;
    cfg.train.learning_rate = 0.3;
    cfg.k = 2;
    sweep(cfg);
  };

  const fs::path out_a = fs::temp_directory_path() / "toxattn_acc_sweep_a";
  const fs::path out_b = fs::temp_directory_path() / "toxattn_acc_sweep_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  run(out_a);
  run(out_b);

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(out_a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), out_a);
    c.require(fs::exists(out_b / rel), "missing artifact " + rel.string());
    if (fs::exists(out_b / rel)) {
      c.require(slurp(entry.path()) == slurp(out_b / rel),
                "artifact differs: " + rel.string());
    }
    ++compared;
  }
  c.require(compared >= 4 * 9 + 5, "unexpected artifact count");

  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::remove(corpus_path);
  c.finish();
}

}  // namespace

int main() {
  criterion_metric_oracles();
  criterion_gradients();
  criterion_aggregation();
  criterion_loss_contract();
  criterion_masking();
  criterion_trends();
  criterion_determinism();
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}
