#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toxattn/corpus.hpp"
#include "toxattn/masking.hpp"
#include "toxattn/model.hpp"

namespace toxattn {

/// 1 - p(Normal): probability mass on the two toxic classes.
inline double toxicity_score(const Eigen::Vector3d& probs) {
  return 1.0 - probs[static_cast<int>(Label::Normal)];
}

/// Fraction of exact label matches. Throws on length mismatch or empty
/// input.
double accuracy(std::span<const Label> preds, std::span<const Label> golds);

/// Unweighted mean of per-class F1 over all three classes; a class with
/// precision+recall = 0 contributes F1 = 0 and the denominator stays 3.
double macro_f1(std::span<const Label> preds, std::span<const Label> golds);

/// Mann-Whitney AUROC: probability a random positive outscores a random
/// negative, ties counted 1/2. nullopt when either class is absent.
std::optional<double> auroc_binary(std::span<const double> scores,
                                   std::span<const std::uint8_t> positives);

/// One-vs-rest AUROC per class present in golds, macro-averaged.
/// nullopt when fewer than two classes are present.
std::optional<double> auroc_multiclass(std::span<const Eigen::Vector3d> probs,
                                       std::span<const Label> golds);

/// Toxic-vs-normal AUROC restricted to posts mentioning the community.
std::optional<double> subgroup_auc(const std::string& community,
                                   std::span<const ResolvedPost> posts,
                                   std::span<const double> tox_scores);

/// AUROC over {normal posts mentioning c} + {toxic posts not mentioning
/// c}; high means community mentions do not read as toxicity.
std::optional<double> bpsn_auc(const std::string& community,
                               std::span<const ResolvedPost> posts,
                               std::span<const double> tox_scores);

/// AUROC over {toxic posts mentioning c} + {normal posts not mentioning
/// c}; high means toxicity toward the community is still detected.
std::optional<double> bnsp_auc(const std::string& community,
                               std::span<const ResolvedPost> posts,
                               std::span<const double> tox_scores);

/// Indices of the min(k, length) largest attention weights, ties broken
/// toward the lower index. Result is sorted ascending.
std::vector<std::size_t> extract_rationale(const Eigen::VectorXd& attention, int k);

/// A predicted rationale matches gold when IOU >= 0.5; F1 over the
/// match counts across aligned posts.
double iou_f1(std::span<const std::vector<std::size_t>> pred_rationales,
              std::span<const std::vector<std::size_t>> gold_rationales);

/// Token-level F1 per post, macro-averaged.
double token_f1(std::span<const std::vector<std::size_t>> pred_rationales,
                std::span<const std::vector<std::size_t>> gold_rationales);

/// Area under the precision-recall curve by the step rule (precision-
/// weighted recall increments), tokens pooled across posts. nullopt
/// when no gold-marked token exists.
std::optional<double> auprc_soft_pooled(std::span<const Eigen::VectorXd> attentions,
                                        std::span<const RationaleVec> gold_rationales);

/// Same curve computed per post and averaged; posts without a positive
/// token are skipped.
std::optional<double> auprc_soft_macro(std::span<const Eigen::VectorXd> attentions,
                                       std::span<const RationaleVec> gold_rationales);

/// p(class | full input) - p(class | rationale erased) for the model's
/// argmax class.
double comprehensiveness(const ModelParams& params, std::span<const std::string> tokens,
                         std::span<const std::size_t> rationale);

/// p(class | full input) - p(class | rationale only) for the model's
/// argmax class.
double sufficiency(const ModelParams& params, std::span<const std::string> tokens,
                   std::span<const std::size_t> rationale);

struct PerformanceMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auroc;
};

struct CommunityBias {
  std::optional<double> subgroup_auc;
  std::optional<double> bpsn_auc;
  std::optional<double> bnsp_auc;
};

struct BiasMetrics {
  std::map<std::string, CommunityBias> per_community;
  /// Plain means over communities whose value is defined.
  std::optional<double> subgroup_auc_mean;
  std::optional<double> bpsn_auc_mean;
  std::optional<double> bnsp_auc_mean;
};

struct ExplainabilityMetrics {
  double iou_f1 = 0.0;
  double token_f1 = 0.0;
  std::optional<double> auprc;        // pooled over tokens (headline)
  std::optional<double> auprc_macro;  // averaged per post
  double comprehensiveness = 0.0;
  double sufficiency = 0.0;
};

struct EvalReport {
  PerformanceMetrics performance;
  BiasMetrics bias;
  ExplainabilityMetrics explainability;
  LossBreakdown mean_loss;
  std::size_t n_posts = 0;
};

struct EvalConfig {
  AttentionStrategy strategy = AttentionStrategy::Normal;
  NormalAttentionMode normal_attention = NormalAttentionMode::Uniform;
  double lambda = 1.0;
  int k = 5;  // discrete rationale size
  /// When set and mask.apply_to == TrainAndEval, the split is masked
  /// before prediction.
  const CommunityLexicon* lexicon = nullptr;
  MaskConfig mask;
};

/// Full metric suite over one corpus split. Plausibility metrics cover
/// toxic-gold posts (gold rationale = annotator union); faithfulness
/// covers every post using the model's own top-k rationale.
EvalReport evaluate(const ModelParams& params, const Corpus& corpus, Split split,
                    const EvalConfig& config);

}  // namespace toxattn
