#include "toxattn/rationale.hpp"

#include <algorithm>
#include <stdexcept>

#include "toxattn/numerics.hpp"

namespace toxattn {

std::string_view to_string(AttentionStrategy s) {
  switch (s) {
    case AttentionStrategy::Normal: return "normal";
    case AttentionStrategy::Conservative: return "conservative";
    case AttentionStrategy::Lenient: return "lenient";
  }
  return "?";
}

std::optional<AttentionStrategy> strategy_from_string(std::string_view s) {
  if (s == "normal") return AttentionStrategy::Normal;
  if (s == "conservative") return AttentionStrategy::Conservative;
  if (s == "lenient") return AttentionStrategy::Lenient;
  return std::nullopt;
}

std::string_view to_string(NormalAttentionMode m) {
  return m == NormalAttentionMode::Uniform ? "uniform" : "skip";
}

std::optional<NormalAttentionMode> normal_attention_from_string(std::string_view s) {
  if (s == "uniform") return NormalAttentionMode::Uniform;
  if (s == "skip") return NormalAttentionMode::Skip;
  return std::nullopt;
}

Eigen::VectorXd combine_rationales(std::span<const RationaleVec> rationales,
                                   AttentionStrategy strategy) {
  if (rationales.empty()) {
    throw std::invalid_argument("combine_rationales: no rationale vectors");
  }
  const std::size_t len = rationales.front().size();
  for (const RationaleVec& r : rationales) {
    if (r.size() != len) {
      throw std::invalid_argument("combine_rationales: unequal rationale lengths");
    }
  }

  Eigen::VectorXd out(static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < len; ++i) {
    switch (strategy) {
      case AttentionStrategy::Normal: {
        double sum = 0.0;
        for (const RationaleVec& r : rationales) sum += r[i];
        out[static_cast<Eigen::Index>(i)] = sum / static_cast<double>(rationales.size());
        break;
      }
      case AttentionStrategy::Conservative: {
        bool all = std::all_of(rationales.begin(), rationales.end(),
                               [i](const RationaleVec& r) { return r[i] != 0; });
        out[static_cast<Eigen::Index>(i)] = all ? 1.0 : 0.0;
        break;
      }
      case AttentionStrategy::Lenient: {
        bool any = std::any_of(rationales.begin(), rationales.end(),
                               [i](const RationaleVec& r) { return r[i] != 0; });
        out[static_cast<Eigen::Index>(i)] = any ? 1.0 : 0.0;
        break;
      }
    }
  }
  return out;
}

AttentionTarget softmax_normalize(const Eigen::VectorXd& raw) {
  AttentionTarget target;
  target.weights = softmax(raw);
  return target;
}

AttentionTarget ground_truth_attention(const ResolvedPost& post,
                                       AttentionStrategy strategy) {
  const auto n = static_cast<Eigen::Index>(post.post.tokens.size());
  if (post.gold_label == Label::Normal) {
    return {uniform_distribution(n), false};
  }

  // Annotators who voted Normal may have no rationale; only present
  // vectors participate in the combination.
  std::vector<RationaleVec> present;
  for (const AnnotatorRecord& rec : post.post.annotators) {
    if (!rec.rationale.empty()) present.push_back(rec.rationale);
  }

  Eigen::VectorXd raw = present.empty()
                            ? Eigen::VectorXd::Zero(n).eval()
                            : combine_rationales(present, strategy);
  AttentionTarget target = softmax_normalize(raw);
  target.uniform_fallback = (raw.array() == 0.0).all();
  return target;
}

}  // namespace toxattn
