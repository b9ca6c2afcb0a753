#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "toxattn/corpus.hpp"

namespace toxattn {

/// ASCII lowercasing; bytes outside A-Z pass through unchanged.
std::string lowercase_ascii(std::string_view s);

/// Surface terms to mask, keyed by the community they refer to. Terms
/// are stored lowercased; matching is exact single-token match after
/// lowercasing the post token.
struct CommunityLexicon {
  std::map<std::string, std::set<std::string>> entries;

  /// Loads a JSON map {"community": ["term", ...]}. Throws CorpusError
  /// on unreadable/malformed files, empty term sets, or multi-token terms.
  static CommunityLexicon load(const std::filesystem::path& path);

  bool matches(const std::string& lowercased_token) const;
  std::size_t term_count() const;
};

enum class MaskApplyTo : int { TrainOnly = 0, TrainAndEval = 1 };

std::string_view to_string(MaskApplyTo a);
std::optional<MaskApplyTo> mask_apply_from_string(std::string_view s);

struct MaskConfig {
  std::string mask_token = "[UNK]";
  MaskApplyTo apply_to = MaskApplyTo::TrainOnly;
};

struct MaskSummary {
  std::array<std::size_t, kNumSplits> masked_by_split{};
  std::size_t total() const {
    return masked_by_split[0] + masked_by_split[1] + masked_by_split[2];
  }
};

/// Copy of the post with every lexicon-hit token replaced by the mask
/// token. Labels, rationales, targets and lengths are unchanged.
/// Returns the number of replaced tokens via masked_count if non-null.
ResolvedPost mask_post(const ResolvedPost& post, const CommunityLexicon& lexicon,
                       const MaskConfig& config, std::size_t* masked_count = nullptr);

/// Masks the train split always, and val/test when apply_to is
/// TrainAndEval. Per-split replaced-token counts go to the summary.
Corpus mask_corpus(const Corpus& corpus, const CommunityLexicon& lexicon,
                   const MaskConfig& config, MaskSummary* summary = nullptr);

}  // namespace toxattn
