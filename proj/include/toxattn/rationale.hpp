#pragma once

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "toxattn/corpus.hpp"

namespace toxattn {

/// How per-annotator rationale vectors are combined before softmax:
/// Normal = elementwise mean, Conservative = AND (all annotators agree),
/// Lenient = OR (any annotator marked the token).
enum class AttentionStrategy : int { Normal = 0, Conservative = 1, Lenient = 2 };

std::string_view to_string(AttentionStrategy s);
std::optional<AttentionStrategy> strategy_from_string(std::string_view s);

/// Attention-loss handling for posts whose gold label is Normal:
/// Uniform trains them against the uniform target, Skip drops the
/// attention term for them entirely.
enum class NormalAttentionMode : int { Uniform = 0, Skip = 1 };

std::string_view to_string(NormalAttentionMode m);
std::optional<NormalAttentionMode> normal_attention_from_string(std::string_view s);

/// Ground-truth attention distribution over a post's tokens.
struct AttentionTarget {
  Eigen::VectorXd weights;  // >= 0, sums to 1
  /// True when a toxic post's combined rationale was all-zero and the
  /// target therefore degenerated to uniform.
  bool uniform_fallback = false;
};

/// Combines equal-length binary rationale vectors under the strategy.
/// Throws std::invalid_argument on an empty set or unequal lengths.
Eigen::VectorXd combine_rationales(std::span<const RationaleVec> rationales,
                                   AttentionStrategy strategy);

/// Stabilized softmax over the raw combined vector.
AttentionTarget softmax_normalize(const Eigen::VectorXd& raw);

/// Ground-truth attention for a resolved post. Normal-gold posts get
/// the uniform distribution (rationale supervision is deactivated for
/// them); toxic posts get softmax(combine(present rationales)).
AttentionTarget ground_truth_attention(const ResolvedPost& post,
                                       AttentionStrategy strategy);

}  // namespace toxattn
