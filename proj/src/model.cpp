#include "toxattn/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "toxattn/numerics.hpp"
#include "toxattn/rng.hpp"

namespace toxattn {

namespace {

using nlohmann::json;

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

// Forward intermediates shared by loss and backprop.
struct ForwardPass {
  std::vector<int> token_rows;
  Eigen::MatrixXd token_embs;  // T x d
  Eigen::VectorXd scores;      // T
  Eigen::VectorXd attention;   // T
  Eigen::VectorXd context;     // d
  Eigen::Vector3d logits;
  Eigen::Vector3d probs;
};

ForwardPass run_forward(const ModelParams& params, std::span<const std::string> tokens) {
  ForwardPass fp;
  const auto t = static_cast<Eigen::Index>(tokens.size());
  const int d = params.dim();
  fp.token_rows.reserve(tokens.size());
  fp.token_embs.resize(t, d);
  for (Eigen::Index i = 0; i < t; ++i) {
    const int row = params.token_index(tokens[static_cast<std::size_t>(i)]);
    fp.token_rows.push_back(row);
    fp.token_embs.row(i) = params.embeddings.row(row);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  fp.scores = fp.token_embs * params.query * scale;
  fp.attention = softmax(fp.scores);
  fp.context = fp.token_embs.transpose() * fp.attention;
  fp.logits = params.classifier_w * fp.context + params.classifier_b;
  fp.probs = softmax(fp.logits);
  return fp;
}

}  // namespace

std::vector<std::string> build_vocab(const Corpus& corpus, Split split,
                                     const std::string& mask_token) {
  std::vector<std::string> vocab{ModelParams::kOovToken};
  std::map<std::string, int> seen{{vocab[0], 0}};
  auto add = [&](const std::string& token) {
    if (seen.emplace(token, static_cast<int>(vocab.size())).second) {
      vocab.push_back(token);
    }
  };
  add(mask_token);
  for (std::size_t idx : corpus.indices_of(split)) {
    for (const std::string& token : corpus.posts()[idx].post.tokens) add(token);
  }
  return vocab;
}

ModelParams init_params(std::vector<std::string> vocab, int dim, DeterministicRng& rng) {
  if (vocab.empty() || dim <= 0) {
    throw std::invalid_argument("init_params: vocab and dim must be non-empty/positive");
  }
  ModelParams p;
  p.vocab = std::move(vocab);
  for (std::size_t i = 0; i < p.vocab.size(); ++i) {
    p.token_to_index.emplace(p.vocab[i], static_cast<int>(i));
  }
  const auto v = static_cast<Eigen::Index>(p.vocab.size());
  auto draw = [&rng] { return rng.uniform(-0.1, 0.1); };

  p.embeddings.resize(v, dim);
  for (Eigen::Index r = 0; r < v; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) p.embeddings(r, c) = draw();
  }
  p.query.resize(dim);
  for (Eigen::Index c = 0; c < dim; ++c) p.query[c] = draw();
  p.classifier_w.resize(kNumLabels, dim);
  for (Eigen::Index r = 0; r < kNumLabels; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) p.classifier_w(r, c) = draw();
  }
  for (Eigen::Index r = 0; r < kNumLabels; ++r) p.classifier_b[r] = draw();
  return p;
}

ModelParams init_params(std::vector<std::string> vocab, int dim, std::uint64_t seed) {
  DeterministicRng rng(seed);
  return init_params(std::move(vocab), dim, rng);
}

Prediction forward(const ModelParams& params, std::span<const std::string> tokens) {
  if (tokens.empty()) {
    return {Eigen::Vector3d::Constant(1.0 / 3.0), Eigen::VectorXd()};
  }
  ForwardPass fp = run_forward(params, tokens);
  return {fp.probs, fp.attention};
}

LossBreakdown loss(const Prediction& pred, Label gold, const AttentionTarget& target,
                   double lambda) {
  LossBreakdown lb;
  lb.pred = -floored_log(pred.probs[static_cast<int>(gold)]);
  for (Eigen::Index i = 0; i < target.weights.size(); ++i) {
    if (target.weights[i] > 0.0) {
      lb.att -= target.weights[i] * floored_log(pred.attention[i]);
    }
  }
  lb.total = lb.pred + lambda * lb.att;
  return lb;
}

LossBreakdown mean_batch_loss(const ModelParams& params,
                              std::span<const TrainExample> batch, double lambda) {
  if (batch.empty()) {
    throw std::invalid_argument("mean_batch_loss: empty batch");
  }
  LossBreakdown mean;
  for (const TrainExample& ex : batch) {
    Prediction pred = forward(params, ex.tokens);
    LossBreakdown lb = loss(pred, ex.gold, ex.target, lambda);
    mean.pred += lb.pred;
    mean.att += ex.use_attention_loss ? lb.att : 0.0;
  }
  const auto b = static_cast<double>(batch.size());
  mean.pred /= b;
  mean.att /= b;
  mean.total = mean.pred + lambda * mean.att;
  return mean;
}

ParamGradients gradients(const ModelParams& params,
                         std::span<const TrainExample> batch, double lambda) {
  if (batch.empty()) {
    throw std::invalid_argument("gradients: empty batch");
  }
  const int d = params.dim();
  ParamGradients g;
  g.embeddings = Eigen::MatrixXd::Zero(params.embeddings.rows(), d);
  g.query = Eigen::VectorXd::Zero(d);
  g.classifier_w = Eigen::MatrixXd::Zero(kNumLabels, d);
  g.classifier_b = Eigen::Vector3d::Zero();

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  for (const TrainExample& ex : batch) {
    ForwardPass fp = run_forward(params, ex.tokens);
    const auto t = static_cast<Eigen::Index>(ex.tokens.size());
    const double lambda_eff = ex.use_attention_loss ? lambda : 0.0;
    const int y = static_cast<int>(ex.gold);

    // Classification head: d(-log max(p_y, floor))/dlogits.
    Eigen::Vector3d dprobs = Eigen::Vector3d::Zero();
    if (fp.probs[y] > kProbFloor) dprobs[y] = -1.0 / fp.probs[y];
    const double dot_p = dprobs.dot(fp.probs);
    Eigen::Vector3d dlogits =
        fp.probs.cwiseProduct(dprobs - Eigen::Vector3d::Constant(dot_p));

    g.classifier_b += dlogits;
    g.classifier_w += dlogits * fp.context.transpose();
    Eigen::VectorXd dcontext = params.classifier_w.transpose() * dlogits;

    // Attention distribution: context path plus the supervised term.
    Eigen::VectorXd datt = fp.token_embs * dcontext;
    if (lambda_eff != 0.0) {
      for (Eigen::Index i = 0; i < t; ++i) {
        if (ex.target.weights[i] > 0.0 && fp.attention[i] > kProbFloor) {
          datt[i] -= lambda_eff * ex.target.weights[i] / fp.attention[i];
        }
      }
    }
    const double dot_a = datt.dot(fp.attention);
    Eigen::VectorXd dscores =
        fp.attention.cwiseProduct(datt - Eigen::VectorXd::Constant(t, dot_a));

    g.query += fp.token_embs.transpose() * dscores * scale;
    for (Eigen::Index i = 0; i < t; ++i) {
      g.embeddings.row(fp.token_rows[static_cast<std::size_t>(i)]) +=
          fp.attention[i] * dcontext.transpose() +
          dscores[i] * scale * params.query.transpose();
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  g.embeddings *= inv_b;
  g.query *= inv_b;
  g.classifier_w *= inv_b;
  g.classifier_b *= inv_b;
  return g;
}

ModelParams train(const Corpus& corpus, const TrainConfig& config, TrainTrace* trace) {
  const std::vector<std::size_t>& train_idx = corpus.indices_of(Split::Train);
  if (train_idx.empty()) {
    throw std::invalid_argument("train: corpus has an empty train split");
  }
  if (config.learning_rate <= 0.0 || config.epochs < 0 || config.batch_size <= 0 ||
      config.embedding_dim <= 0 || config.lambda < 0.0) {
    throw std::invalid_argument("train: invalid TrainConfig");
  }

  std::vector<TrainExample> examples;
  examples.reserve(train_idx.size());
  for (std::size_t idx : train_idx) {
    const ResolvedPost& rp = corpus.posts()[idx];
    TrainExample ex;
    ex.tokens = rp.post.tokens;
    ex.gold = rp.gold_label;
    ex.target = ground_truth_attention(rp, config.strategy);
    ex.use_attention_loss = !(rp.gold_label == Label::Normal &&
                              config.normal_attention == NormalAttentionMode::Skip);
    examples.push_back(std::move(ex));
  }

  // One seed stream drives initialization and then epoch shuffling.
  DeterministicRng rng(config.seed);
  ModelParams params = init_params(build_vocab(corpus, Split::Train, config.mask_token),
                                   config.embedding_dim, rng);

  if (trace) {
    trace->epoch_loss.clear();
    trace->epoch_loss.push_back(mean_batch_loss(params, examples, config.lambda));
  }

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<TrainExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

      ParamGradients g = gradients(params, batch, config.lambda);
      params.embeddings -= config.learning_rate * g.embeddings;
      params.query -= config.learning_rate * g.query;
      params.classifier_w -= config.learning_rate * g.classifier_w;
      params.classifier_b -= config.learning_rate * g.classifier_b;
    }
    if (trace) {
      trace->epoch_loss.push_back(mean_batch_loss(params, examples, config.lambda));
    }
  }
  return params;
}

Prediction predict_with_erasure(const ModelParams& params,
                                std::span<const std::string> tokens,
                                std::span<const std::uint8_t> keep_mask) {
  if (tokens.size() != keep_mask.size()) {
    throw std::invalid_argument("predict_with_erasure: keep_mask length mismatch");
  }
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (keep_mask[i]) kept.push_back(tokens[i]);
  }
  return forward(params, kept);
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"lambda", c.lambda},
              {"strategy", std::string(to_string(c.strategy))},
              {"normal_attention", std::string(to_string(c.normal_attention))},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"embedding_dim", c.embedding_dim},
              {"mask_token", c.mask_token}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.strategy = strategy_from_string(j.at("strategy").get<std::string>())
                   .value_or(AttentionStrategy::Normal);
  c.normal_attention =
      normal_attention_from_string(j.at("normal_attention").get<std::string>())
          .value_or(NormalAttentionMode::Uniform);
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.mask_token = j.at("mask_token").get<std::string>();
  return c;
}

std::vector<double> to_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::MatrixXd from_row_major(const std::vector<double>& v, Eigen::Index rows,
                               Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw CorpusError("checkpoint: parameter array has wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[k++];
  }
  return m;
}

constexpr const char* kCheckpointFormat = "toxattn-checkpoint-v1";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config) {
  json j;
  j["format"] = kCheckpointFormat;
  j["dim"] = params.dim();
  j["vocab"] = params.vocab;
  j["embeddings"] = to_row_major(params.embeddings);
  j["query"] = std::vector<double>(params.query.begin(), params.query.end());
  j["classifier_weight"] = to_row_major(params.classifier_w);
  j["classifier_bias"] = std::vector<double>{params.classifier_b[0], params.classifier_b[1],
                                             params.classifier_b[2]};
  j["train_config"] = config_to_json(config);

  std::ofstream out(path);
  if (!out) {
    throw CorpusError("cannot write checkpoint: " + path.string());
  }
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CorpusError("cannot open checkpoint: " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError("malformed checkpoint JSON in " + path.string() + ": " + e.what());
  }
  if (!j.contains("format") || j["format"].get<std::string>() != kCheckpointFormat) {
    throw CorpusError("unsupported checkpoint format in " + path.string());
  }

  Checkpoint ckpt;
  ckpt.config = config_from_json(j.at("train_config"));
  ModelParams& p = ckpt.params;
  p.vocab = j.at("vocab").get<std::vector<std::string>>();
  if (p.vocab.empty()) {
    throw CorpusError("checkpoint vocab is empty");
  }
  for (std::size_t i = 0; i < p.vocab.size(); ++i) {
    p.token_to_index.emplace(p.vocab[i], static_cast<int>(i));
  }
  const auto d = j.at("dim").get<Eigen::Index>();
  const auto v = static_cast<Eigen::Index>(p.vocab.size());
  p.embeddings = from_row_major(j.at("embeddings").get<std::vector<double>>(), v, d);
  auto q = j.at("query").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(q.size()) != d) {
    throw CorpusError("checkpoint: query has wrong length");
  }
  p.query = Eigen::Map<Eigen::VectorXd>(q.data(), d);
  p.classifier_w =
      from_row_major(j.at("classifier_weight").get<std::vector<double>>(), kNumLabels, d);
  auto b = j.at("classifier_bias").get<std::vector<double>>();
  if (b.size() != kNumLabels) {
    throw CorpusError("checkpoint: classifier_bias has wrong length");
  }
  p.classifier_b = Eigen::Vector3d(b[0], b[1], b[2]);
  return ckpt;
}

}  // namespace toxattn
