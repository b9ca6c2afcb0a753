#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxattn/corpus.hpp"

namespace builders {

inline toxattn::AnnotatorRecord annot(toxattn::Label label,
                                      toxattn::RationaleVec rationale = {},
                                      std::set<std::string> targets = {}) {
  return {label, std::move(rationale), std::move(targets)};
}

inline toxattn::Post make_post(std::string id, std::vector<std::string> tokens,
                               std::vector<toxattn::AnnotatorRecord> annotators,
                               toxattn::Split split = toxattn::Split::Train) {
  toxattn::Post p;
  p.id = std::move(id);
  p.tokens = std::move(tokens);
  p.annotators = std::move(annotators);
  p.split = split;
  return p;
}

// Resolves a single post; the post must survive validation and voting.
inline toxattn::ResolvedPost resolve_one(toxattn::Post post) {
  toxattn::Corpus c = toxattn::resolve_corpus({std::move(post)});
  if (c.size() != 1) throw std::logic_error("resolve_one: post did not resolve");
  return c.posts().front();
}

// Serializes a corpus back to schema JSON so tests can exercise the
// same file path the CLI uses.
inline std::filesystem::path write_corpus_json(const toxattn::Corpus& corpus,
                                               const std::string& name) {
  nlohmann::json doc = nlohmann::json::array();
  for (const toxattn::ResolvedPost& rp : corpus.posts()) {
    nlohmann::json annotators = nlohmann::json::array();
    for (const toxattn::AnnotatorRecord& rec : rp.post.annotators) {
      nlohmann::json a{{"label", std::string(toxattn::to_string(rec.label))},
                       {"targets", rec.targets}};
      if (!rec.rationale.empty()) a["rationale"] = rec.rationale;
      annotators.push_back(std::move(a));
    }
    doc.push_back({{"id", rp.post.id},
                   {"tokens", rp.post.tokens},
                   {"split", std::string(toxattn::to_string(rp.post.split))},
                   {"annotators", annotators}});
  }
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << doc.dump();
  return path;
}

}  // namespace builders
