#include "toxattn/masking.hpp"

#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

namespace toxattn {

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

CommunityLexicon CommunityLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CorpusError("cannot open lexicon file: " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError("malformed lexicon JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw CorpusError("lexicon JSON must be an object: " + path.string());
  }

  CommunityLexicon lex;
  for (const auto& [community, terms] : doc.items()) {
    if (!terms.is_array() || terms.empty()) {
      throw CorpusError("lexicon community '" + community + "' needs a non-empty term array");
    }
    std::set<std::string>& dst = lex.entries[community];
    for (const auto& t : terms) {
      if (!t.is_string()) {
        throw CorpusError("lexicon community '" + community + "' has a non-string term");
      }
      std::string term = lowercase_ascii(t.get<std::string>());
      if (term.empty() || term.find_first_of(" \t\n\r") != std::string::npos) {
        throw CorpusError("lexicon term '" + t.get<std::string>() +
                          "' must be a single non-empty token");
      }
      dst.insert(std::move(term));
    }
  }
  return lex;
}

bool CommunityLexicon::matches(const std::string& lowercased_token) const {
  for (const auto& [community, terms] : entries) {
    if (terms.contains(lowercased_token)) return true;
  }
  return false;
}

std::size_t CommunityLexicon::term_count() const {
  std::size_t n = 0;
  for (const auto& [community, terms] : entries) n += terms.size();
  return n;
}

ResolvedPost mask_post(const ResolvedPost& post, const CommunityLexicon& lexicon,
                       const MaskConfig& config, std::size_t* masked_count) {
  ResolvedPost out = post;
  std::size_t hits = 0;
  for (std::string& token : out.post.tokens) {
    if (lexicon.matches(lowercase_ascii(token))) {
      token = config.mask_token;
      ++hits;
    }
  }
  if (masked_count) *masked_count = hits;
  return out;
}

Corpus mask_corpus(const Corpus& corpus, const CommunityLexicon& lexicon,
                   const MaskConfig& config, MaskSummary* summary) {
  MaskSummary local;
  MaskSummary& sum = summary ? *summary : local;

  std::vector<ResolvedPost> out;
  out.reserve(corpus.size());
  for (const ResolvedPost& rp : corpus.posts()) {
    const bool apply = rp.post.split == Split::Train ||
                       config.apply_to == MaskApplyTo::TrainAndEval;
    if (!apply) {
      out.push_back(rp);
      continue;
    }
    std::size_t hits = 0;
    out.push_back(mask_post(rp, lexicon, config, &hits));
    sum.masked_by_split[static_cast<int>(rp.post.split)] += hits;
  }
  return Corpus(std::move(out));
}

std::string_view to_string(MaskApplyTo a) {
  return a == MaskApplyTo::TrainOnly ? "train_only" : "train_and_eval";
}

std::optional<MaskApplyTo> mask_apply_from_string(std::string_view s) {
  if (s == "train_only") return MaskApplyTo::TrainOnly;
  if (s == "train_and_eval") return MaskApplyTo::TrainAndEval;
  return std::nullopt;
}

}  // namespace toxattn
