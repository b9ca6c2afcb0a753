#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toxattn/corpus.hpp"
#include "toxattn/rationale.hpp"

namespace toxattn {

/// Probabilities are floored at this value inside logarithms so losses
/// stay finite.
inline constexpr double kProbFloor = 1e-12;

/// Compact attention classifier: one learned query over token
/// embeddings, attention-weighted context, linear 3-class head.
struct ModelParams {
  static constexpr const char* kOovToken = "<oov>";

  std::vector<std::string> vocab;          // index -> token; index 0 is OOV
  std::map<std::string, int> token_to_index;
  Eigen::MatrixXd embeddings;              // V x d
  Eigen::VectorXd query;                   // d
  Eigen::MatrixXd classifier_w;            // 3 x d
  Eigen::Vector3d classifier_b;

  int dim() const { return static_cast<int>(query.size()); }
  int vocab_size() const { return static_cast<int>(embeddings.rows()); }

  /// Vocab lookup; unknown tokens map to the OOV row.
  int token_index(const std::string& token) const {
    auto it = token_to_index.find(token);
    return it == token_to_index.end() ? 0 : it->second;
  }
};

struct Prediction {
  Eigen::Vector3d probs;     // over {Hatespeech, Offensive, Normal}
  Eigen::VectorXd attention; // over input tokens; empty for empty input
};

struct TrainConfig {
  double lambda = 1.0;
  AttentionStrategy strategy = AttentionStrategy::Normal;
  NormalAttentionMode normal_attention = NormalAttentionMode::Uniform;
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 16;
  std::uint64_t seed = 42;
  int embedding_dim = 16;
  std::string mask_token = "[UNK]";
};

struct LossBreakdown {
  double pred = 0.0;
  double att = 0.0;
  double total = 0.0;
};

struct ParamGradients {
  Eigen::MatrixXd embeddings;
  Eigen::VectorXd query;
  Eigen::MatrixXd classifier_w;
  Eigen::Vector3d classifier_b;
};

/// One training item: tokens, gold label, ground-truth attention.
/// use_attention_loss is false when NormalAttentionMode::Skip drops the
/// attention term for a Normal-gold post (that item trains as lambda=0).
struct TrainExample {
  std::vector<std::string> tokens;
  Label gold = Label::Normal;
  AttentionTarget target;
  bool use_attention_loss = true;
};

/// Vocabulary for a split: OOV sentinel, the mask token, then tokens in
/// first-appearance order.
std::vector<std::string> build_vocab(const Corpus& corpus, Split split,
                                     const std::string& mask_token);

class DeterministicRng;

/// All parameters drawn uniformly from [-0.1, 0.1] from the rng stream.
ModelParams init_params(std::vector<std::string> vocab, int dim, DeterministicRng& rng);

/// Convenience overload seeding a fresh stream.
ModelParams init_params(std::vector<std::string> vocab, int dim, std::uint64_t seed);

/// Attention-weighted forward pass. Empty input yields uniform class
/// probabilities and an empty attention vector.
Prediction forward(const ModelParams& params, std::span<const std::string> tokens);

/// l_pred = -log p[gold]; l_att = -sum_i target_i log attention_i;
/// total = pred + lambda * att. Probabilities floored at kProbFloor.
LossBreakdown loss(const Prediction& pred, Label gold, const AttentionTarget& target,
                   double lambda);

/// Mean loss over a batch; items with use_attention_loss=false
/// contribute 0 to the attention term.
LossBreakdown mean_batch_loss(const ModelParams& params,
                              std::span<const TrainExample> batch, double lambda);

/// Exact analytic gradient of mean_batch_loss with respect to every
/// parameter.
ParamGradients gradients(const ModelParams& params,
                         std::span<const TrainExample> batch, double lambda);

struct TrainTrace {
  /// Full-pass mean loss on the train split: entry 0 before training,
  /// then one entry after each epoch.
  std::vector<LossBreakdown> epoch_loss;
};

/// Seeded mini-batch gradient descent on the corpus train split.
/// Deterministic given (corpus, config). Throws std::invalid_argument
/// if the train split is empty.
ModelParams train(const Corpus& corpus, const TrainConfig& config,
                  TrainTrace* trace = nullptr);

/// Forward pass restricted to tokens with keep_mask = 1. An all-zero
/// mask yields the empty-input convention (uniform probabilities).
Prediction predict_with_erasure(const ModelParams& params,
                                std::span<const std::string> tokens,
                                std::span<const std::uint8_t> keep_mask);

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace toxattn
