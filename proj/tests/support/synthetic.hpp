#pragma once

// Seeded synthetic corpora for training and masking tests.
//
// Toxic posts carry two kinds of toxicity-correlated tokens: markers,
// which annotators mark as rationales, and context tokens, which are
// just as predictive but never marked. A classifier can succeed on
// either, so only attention supervision ties the model's attention to
// the markers. Markers also leak into a few normal posts as noise, and
// a decoy community term appears mostly in normal posts; together these
// blur the toxicity margin enough that keying on the decoy measurably
// hurts the bias slices, which is what masking is meant to fix.

#include <string>
#include <vector>

#include "toxattn/corpus.hpp"
#include "toxattn/rng.hpp"

namespace synthetic {

inline const std::vector<std::string> kFillers = {
    "veld", "moss", "quill", "ember", "rill",  "crag", "dune",
    "fen",  "gale", "heath", "isle",  "knoll", "loam", "mesa",
    "nook", "pike", "reef",  "sward", "tarn",  "wold"};
inline const std::vector<std::string> kToxicMarkers = {"zork", "grubix", "smax"};
inline const std::vector<std::string> kToxicContext = {"brek", "floop", "skarn"};
inline const std::string kDecoyTerm = "avaruk";
inline const std::string kDecoyCommunity = "Avaruk";
inline const std::string kOtherCommunity = "Borim";
inline const std::string kOtherTerm = "borim";

struct GeneratorConfig {
  std::size_t n_posts = 500;
  double toxic_fraction = 0.5;
  double decoy_in_normal = 0.40;   // P(decoy term appears in a normal post)
  double decoy_in_toxic = 0.20;
  double other_in_toxic = 0.20;
  double marker_noise_in_normal = 0.08;  // unmarked toxicity vocabulary leakage
  double context_in_normal = 0.08;
  double annotator_noise = 0.25;   // P(an annotator marks one extra token)
  double test_fraction = 0.20;
  std::uint64_t seed = 1234;
};

inline toxattn::Corpus make_corpus(const GeneratorConfig& cfg,
                                   toxattn::LoadSummary* summary = nullptr) {
  using namespace toxattn;
  DeterministicRng rng(cfg.seed);
  std::vector<Post> posts;
  posts.reserve(cfg.n_posts);

  for (std::size_t n = 0; n < cfg.n_posts; ++n) {
    Post post;
    post.id = "syn-" + std::to_string(n);
    post.split = rng.unit() < cfg.test_fraction ? Split::Test : Split::Train;

    const bool toxic = rng.unit() < cfg.toxic_fraction;
    const std::size_t n_fillers = 6 + rng.index(5);
    for (std::size_t i = 0; i < n_fillers; ++i) {
      post.tokens.push_back(kFillers[rng.index(kFillers.size())]);
    }
    auto insert_token = [&](const std::string& token) {
      post.tokens.insert(
          post.tokens.begin() + static_cast<std::ptrdiff_t>(rng.index(post.tokens.size() + 1)),
          token);
    };

    std::set<std::string> communities;
    if (toxic) {
      const bool mentions_decoy = rng.unit() < cfg.decoy_in_toxic;
      // Toxicity aimed at the decoy community is implicit: one marker
      // and no context tokens. Relying on the community term instead of
      // that weak evidence is the bias masking is meant to remove.
      const std::size_t n_markers = mentions_decoy ? 1 : 1 + rng.index(2);
      for (std::size_t i = 0; i < n_markers; ++i) {
        insert_token(kToxicMarkers[rng.index(kToxicMarkers.size())]);
      }
      const std::size_t n_context = mentions_decoy ? 0 : 1 + rng.index(2);
      for (std::size_t i = 0; i < n_context; ++i) {
        insert_token(kToxicContext[rng.index(kToxicContext.size())]);
      }
      if (mentions_decoy) {
        insert_token(kDecoyTerm);
        communities.insert(kDecoyCommunity);
      }
      if (rng.unit() < cfg.other_in_toxic) {
        insert_token(kOtherTerm);
        communities.insert(kOtherCommunity);
      }
    } else {
      if (rng.unit() < cfg.marker_noise_in_normal) {
        insert_token(kToxicMarkers[rng.index(kToxicMarkers.size())]);
      }
      if (rng.unit() < cfg.context_in_normal) {
        insert_token(kToxicContext[rng.index(kToxicContext.size())]);
      }
      if (rng.unit() < cfg.decoy_in_normal) {
        insert_token(kDecoyTerm);
        communities.insert(kDecoyCommunity);
      }
    }

    // Gold rationales sit on the markers only.
    std::vector<std::size_t> marker_positions;
    for (std::size_t i = 0; i < post.tokens.size(); ++i) {
      for (const std::string& m : kToxicMarkers) {
        if (post.tokens[i] == m) marker_positions.push_back(i);
      }
    }

    const Label toxic_label = rng.unit() < 0.5 ? Label::Hatespeech : Label::Offensive;
    for (int a = 0; a < 3; ++a) {
      AnnotatorRecord rec;
      if (toxic) {
        rec.label = toxic_label;
        rec.rationale.assign(post.tokens.size(), 0);
        for (std::size_t pos : marker_positions) rec.rationale[pos] = 1;
        if (rng.unit() < cfg.annotator_noise) {
          rec.rationale[rng.index(post.tokens.size())] = 1;
        }
      } else {
        rec.label = Label::Normal;
      }
      rec.targets = communities;
      post.annotators.push_back(std::move(rec));
    }
    posts.push_back(std::move(post));
  }
  return resolve_corpus(std::move(posts), summary);
}

}  // namespace synthetic
