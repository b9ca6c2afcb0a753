#include "toxattn/metrics.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace toxattn {

double accuracy(std::span<const Label> preds, std::span<const Label> golds) {
  if (preds.size() != golds.size() || preds.empty()) {
    throw std::invalid_argument("accuracy: need equal non-zero lengths");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double macro_f1(std::span<const Label> preds, std::span<const Label> golds) {
  if (preds.size() != golds.size() || preds.empty()) {
    throw std::invalid_argument("macro_f1: need equal non-zero lengths");
  }
  double sum = 0.0;
  for (int c = 0; c < kNumLabels; ++c) {
    const auto label = static_cast<Label>(c);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == label && golds[i] == label) ++tp;
      if (preds[i] == label && golds[i] != label) ++fp;
      if (preds[i] != label && golds[i] == label) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  }
  return sum / kNumLabels;
}

std::optional<double> auroc_binary(std::span<const double> scores,
                                   std::span<const std::uint8_t> positives) {
  if (scores.size() != positives.size()) {
    throw std::invalid_argument("auroc_binary: length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (std::uint8_t p : positives) n_pos += p ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  // Rank-sum form of the Mann-Whitney statistic; tie groups share their
  // average rank, which counts tied pairs as 1/2.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (positives[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

std::optional<double> auroc_multiclass(std::span<const Eigen::Vector3d> probs,
                                       std::span<const Label> golds) {
  if (probs.size() != golds.size() || probs.empty()) {
    throw std::invalid_argument("auroc_multiclass: need equal non-zero lengths");
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    const auto label = static_cast<Label>(c);
    if (std::none_of(golds.begin(), golds.end(), [&](Label g) { return g == label; })) {
      continue;
    }
    if (std::all_of(golds.begin(), golds.end(), [&](Label g) { return g == label; })) {
      continue;  // no negatives for this class
    }
    std::vector<double> scores(probs.size());
    std::vector<std::uint8_t> pos(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      scores[i] = probs[i][c];
      pos[i] = golds[i] == label ? 1 : 0;
    }
    sum += *auroc_binary(scores, pos);
    ++present;
  }
  if (present < 2) return std::nullopt;
  return sum / present;
}

namespace {

// AUROC over the subset of posts selected by `keep`, positive = toxic.
std::optional<double> sliced_auroc(std::span<const ResolvedPost> posts,
                                   std::span<const double> tox_scores,
                                   const std::function<bool(const ResolvedPost&)>& keep) {
  if (posts.size() != tox_scores.size()) {
    throw std::invalid_argument("bias AUC: posts/scores length mismatch");
  }
  std::vector<double> scores;
  std::vector<std::uint8_t> pos;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!keep(posts[i])) continue;
    scores.push_back(tox_scores[i]);
    pos.push_back(is_toxic(posts[i].gold_label) ? 1 : 0);
  }
  if (scores.empty()) return std::nullopt;
  return auroc_binary(scores, pos);
}

bool mentions(const ResolvedPost& rp, const std::string& community) {
  return rp.gold_targets.contains(community);
}

}  // namespace

std::optional<double> subgroup_auc(const std::string& community,
                                   std::span<const ResolvedPost> posts,
                                   std::span<const double> tox_scores) {
  return sliced_auroc(posts, tox_scores,
                      [&](const ResolvedPost& rp) { return mentions(rp, community); });
}

std::optional<double> bpsn_auc(const std::string& community,
                               std::span<const ResolvedPost> posts,
                               std::span<const double> tox_scores) {
  return sliced_auroc(posts, tox_scores, [&](const ResolvedPost& rp) {
    const bool m = mentions(rp, community);
    return is_toxic(rp.gold_label) ? !m : m;
  });
}

std::optional<double> bnsp_auc(const std::string& community,
                               std::span<const ResolvedPost> posts,
                               std::span<const double> tox_scores) {
  return sliced_auroc(posts, tox_scores, [&](const ResolvedPost& rp) {
    const bool m = mentions(rp, community);
    return is_toxic(rp.gold_label) ? m : !m;
  });
}

std::vector<std::size_t> extract_rationale(const Eigen::VectorXd& attention, int k) {
  if (k <= 0) {
    throw std::invalid_argument("extract_rationale: k must be positive");
  }
  const auto n = static_cast<std::size_t>(attention.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attention[static_cast<Eigen::Index>(a)] >
           attention[static_cast<Eigen::Index>(b)];
  });
  order.resize(std::min(n, static_cast<std::size_t>(k)));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

std::size_t intersection_size(const std::vector<std::size_t>& a,
                              const std::vector<std::size_t>& b) {
  // Inputs are sorted ascending.
  std::size_t count = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count, ++i, ++j;
    }
  }
  return count;
}

}  // namespace

double iou_f1(std::span<const std::vector<std::size_t>> pred_rationales,
              std::span<const std::vector<std::size_t>> gold_rationales) {
  if (pred_rationales.size() != gold_rationales.size()) {
    throw std::invalid_argument("iou_f1: aligned post sets required");
  }
  if (pred_rationales.empty()) return 0.0;
  std::size_t matches = 0;
  for (std::size_t i = 0; i < pred_rationales.size(); ++i) {
    const std::size_t inter = intersection_size(pred_rationales[i], gold_rationales[i]);
    const std::size_t uni =
        pred_rationales[i].size() + gold_rationales[i].size() - inter;
    if (uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) >= 0.5) {
      ++matches;
    }
  }
  // One predicted and one gold rationale per post, so precision and
  // recall over match counts coincide and F1 reduces to the match rate.
  return static_cast<double>(matches) / static_cast<double>(pred_rationales.size());
}

double token_f1(std::span<const std::vector<std::size_t>> pred_rationales,
                std::span<const std::vector<std::size_t>> gold_rationales) {
  if (pred_rationales.size() != gold_rationales.size()) {
    throw std::invalid_argument("token_f1: aligned post sets required");
  }
  if (pred_rationales.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_rationales.size(); ++i) {
    const auto& pred = pred_rationales[i];
    const auto& gold = gold_rationales[i];
    const auto inter = static_cast<double>(intersection_size(pred, gold));
    const double p = pred.empty() ? 0.0 : inter / static_cast<double>(pred.size());
    const double r = gold.empty() ? 0.0 : inter / static_cast<double>(gold.size());
    sum += (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  return sum / static_cast<double>(pred_rationales.size());
}

namespace {

// Step-rule average precision: sum of precision * recall increment over
// descending score thresholds, equal scores processed as one group.
std::optional<double> average_precision(std::vector<std::pair<double, std::uint8_t>> items) {
  std::size_t n_pos = 0;
  for (const auto& [score, rel] : items) n_pos += rel ? 1 : 0;
  if (n_pos == 0) return std::nullopt;

  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  double ap = 0.0;
  double recall_prev = 0.0;
  std::size_t tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) ++j;
    for (std::size_t k = i; k < j; ++k) {
      ++seen;
      if (items[k].second) ++tp;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return ap;
}

}  // namespace

std::optional<double> auprc_soft_pooled(std::span<const Eigen::VectorXd> attentions,
                                        std::span<const RationaleVec> gold_rationales) {
  if (attentions.size() != gold_rationales.size()) {
    throw std::invalid_argument("auprc: aligned post sets required");
  }
  std::vector<std::pair<double, std::uint8_t>> pooled;
  for (std::size_t p = 0; p < attentions.size(); ++p) {
    const auto& att = attentions[p];
    const auto& gold = gold_rationales[p];
    if (static_cast<std::size_t>(att.size()) != gold.size()) {
      throw std::invalid_argument("auprc: attention/gold length mismatch");
    }
    for (Eigen::Index i = 0; i < att.size(); ++i) {
      pooled.emplace_back(att[i], gold[static_cast<std::size_t>(i)]);
    }
  }
  if (pooled.empty()) return std::nullopt;
  return average_precision(std::move(pooled));
}

std::optional<double> auprc_soft_macro(std::span<const Eigen::VectorXd> attentions,
                                       std::span<const RationaleVec> gold_rationales) {
  if (attentions.size() != gold_rationales.size()) {
    throw std::invalid_argument("auprc: aligned post sets required");
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < attentions.size(); ++p) {
    std::vector<std::pair<double, std::uint8_t>> items;
    for (Eigen::Index i = 0; i < attentions[p].size(); ++i) {
      items.emplace_back(attentions[p][i], gold_rationales[p][static_cast<std::size_t>(i)]);
    }
    if (auto ap = average_precision(std::move(items))) {
      sum += *ap;
      ++counted;
    }
  }
  if (counted == 0) return std::nullopt;
  return sum / static_cast<double>(counted);
}

namespace {

std::pair<Eigen::Index, double> argmax_prob(const Eigen::Vector3d& probs) {
  Eigen::Index arg = 0;
  const double top = probs.maxCoeff(&arg);
  return {arg, top};
}

RationaleVec complement_mask(std::size_t length, std::span<const std::size_t> rationale) {
  RationaleVec mask(length, 1);
  for (std::size_t idx : rationale) mask[idx] = 0;
  return mask;
}

RationaleVec selection_mask(std::size_t length, std::span<const std::size_t> rationale) {
  RationaleVec mask(length, 0);
  for (std::size_t idx : rationale) mask[idx] = 1;
  return mask;
}

}  // namespace

double comprehensiveness(const ModelParams& params, std::span<const std::string> tokens,
                         std::span<const std::size_t> rationale) {
  const Prediction full = forward(params, tokens);
  const auto [cls, p_full] = argmax_prob(full.probs);
  const Prediction erased =
      predict_with_erasure(params, tokens, complement_mask(tokens.size(), rationale));
  return p_full - erased.probs[cls];
}

double sufficiency(const ModelParams& params, std::span<const std::string> tokens,
                   std::span<const std::size_t> rationale) {
  const Prediction full = forward(params, tokens);
  const auto [cls, p_full] = argmax_prob(full.probs);
  const Prediction only =
      predict_with_erasure(params, tokens, selection_mask(tokens.size(), rationale));
  return p_full - only.probs[cls];
}

namespace {

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

EvalReport evaluate(const ModelParams& params, const Corpus& corpus, Split split,
                    const EvalConfig& config) {
  const std::vector<std::size_t>& idx = corpus.indices_of(split);
  if (idx.empty()) {
    throw std::invalid_argument("evaluate: empty split");
  }

  std::vector<ResolvedPost> posts;
  posts.reserve(idx.size());
  for (std::size_t i : idx) posts.push_back(corpus.posts()[i]);
  if (config.lexicon && config.mask.apply_to == MaskApplyTo::TrainAndEval) {
    for (ResolvedPost& rp : posts) rp = mask_post(rp, *config.lexicon, config.mask);
  }

  EvalReport report;
  report.n_posts = posts.size();

  // One forward pass per post feeds every metric family.
  std::vector<Prediction> preds;
  std::vector<Label> pred_labels, gold_labels;
  std::vector<Eigen::Vector3d> prob_triples;
  std::vector<double> tox_scores;
  preds.reserve(posts.size());
  for (const ResolvedPost& rp : posts) {
    Prediction pred = forward(params, rp.post.tokens);
    prob_triples.push_back(pred.probs);
    tox_scores.push_back(toxicity_score(pred.probs));
    Eigen::Index cls = 0;
    pred.probs.maxCoeff(&cls);
    pred_labels.push_back(static_cast<Label>(cls));
    gold_labels.push_back(rp.gold_label);
    preds.push_back(std::move(pred));
  }

  report.performance.accuracy = accuracy(pred_labels, gold_labels);
  report.performance.macro_f1 = macro_f1(pred_labels, gold_labels);
  report.performance.auroc = auroc_multiclass(prob_triples, gold_labels);

  // Bias slices for every community attested in the split.
  std::vector<std::optional<double>> sub, bpsn, bnsp;
  std::set<std::string> communities;
  for (const ResolvedPost& rp : posts) {
    communities.insert(rp.gold_targets.begin(), rp.gold_targets.end());
  }
  for (const std::string& c : communities) {
    CommunityBias cb;
    cb.subgroup_auc = subgroup_auc(c, posts, tox_scores);
    cb.bpsn_auc = bpsn_auc(c, posts, tox_scores);
    cb.bnsp_auc = bnsp_auc(c, posts, tox_scores);
    sub.push_back(cb.subgroup_auc);
    bpsn.push_back(cb.bpsn_auc);
    bnsp.push_back(cb.bnsp_auc);
    report.bias.per_community.emplace(c, cb);
  }
  report.bias.subgroup_auc_mean = mean_defined(sub);
  report.bias.bpsn_auc_mean = mean_defined(bpsn);
  report.bias.bnsp_auc_mean = mean_defined(bnsp);

  // Plausibility over toxic-gold posts against the annotator union.
  std::vector<std::vector<std::size_t>> pred_rats, gold_rats;
  std::vector<Eigen::VectorXd> toxic_attentions;
  std::vector<RationaleVec> toxic_gold_bits;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const ResolvedPost& rp = posts[i];
    if (!is_toxic(rp.gold_label)) continue;
    pred_rats.push_back(extract_rationale(preds[i].attention, config.k));
    std::vector<std::size_t> gold_idx;
    for (std::size_t t = 0; t < rp.gold_rationale_union.size(); ++t) {
      if (rp.gold_rationale_union[t]) gold_idx.push_back(t);
    }
    gold_rats.push_back(std::move(gold_idx));
    if (std::any_of(rp.gold_rationale_union.begin(), rp.gold_rationale_union.end(),
                    [](std::uint8_t b) { return b != 0; })) {
      toxic_attentions.push_back(preds[i].attention);
      toxic_gold_bits.push_back(rp.gold_rationale_union);
    }
  }
  if (!pred_rats.empty()) {
    report.explainability.iou_f1 = iou_f1(pred_rats, gold_rats);
    report.explainability.token_f1 = token_f1(pred_rats, gold_rats);
  }
  if (!toxic_attentions.empty()) {
    report.explainability.auprc = auprc_soft_pooled(toxic_attentions, toxic_gold_bits);
    report.explainability.auprc_macro =
        auprc_soft_macro(toxic_attentions, toxic_gold_bits);
  }

  // Faithfulness of the model's own rationale, over every post.
  double comp_sum = 0.0, suff_sum = 0.0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const auto rationale = extract_rationale(preds[i].attention, config.k);
    comp_sum += comprehensiveness(params, posts[i].post.tokens, rationale);
    suff_sum += sufficiency(params, posts[i].post.tokens, rationale);
  }
  report.explainability.comprehensiveness = comp_sum / static_cast<double>(posts.size());
  report.explainability.sufficiency = suff_sum / static_cast<double>(posts.size());

  // Mean joint loss on the split, under the training-time conventions.
  std::vector<TrainExample> examples;
  examples.reserve(posts.size());
  for (const ResolvedPost& rp : posts) {
    TrainExample ex;
    ex.tokens = rp.post.tokens;
    ex.gold = rp.gold_label;
    ex.target = ground_truth_attention(rp, config.strategy);
    ex.use_attention_loss = !(rp.gold_label == Label::Normal &&
                              config.normal_attention == NormalAttentionMode::Skip);
    examples.push_back(std::move(ex));
  }
  report.mean_loss = mean_batch_loss(params, examples, config.lambda);

  return report;
}

}  // namespace toxattn
