#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toxattn {

enum class Label : int { Hatespeech = 0, Offensive = 1, Normal = 2 };

inline constexpr int kNumLabels = 3;

/// Hatespeech and Offensive are the toxic categories; Normal is the
/// unique non-toxic one.
inline bool is_toxic(Label l) { return l != Label::Normal; }

std::string_view to_string(Label l);
std::optional<Label> label_from_string(std::string_view s);

enum class Split : int { Train = 0, Val = 1, Test = 2 };

inline constexpr int kNumSplits = 3;

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

/// Binary rationale vector; entries are 0 or 1. An empty vector means
/// the annotator supplied no rationale (legal only for Normal votes).
using RationaleVec = std::vector<std::uint8_t>;

struct AnnotatorRecord {
  Label label = Label::Normal;
  RationaleVec rationale;
  std::set<std::string> targets;
};

struct Post {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<AnnotatorRecord> annotators;
  Split split = Split::Train;
};

struct ResolvedPost {
  Post post;
  Label gold_label = Label::Normal;
  std::set<std::string> gold_targets;
  RationaleVec gold_rationale_union;
};

struct LoadIssue {
  std::string post_id;
  std::string reason;
};

struct LoadSummary {
  std::size_t total = 0;
  std::size_t loaded = 0;
  std::size_t excluded_invalid = 0;
  std::size_t excluded_no_majority = 0;
  /// Toxic gold label but no annotator marked any token; the attention
  /// target for such posts degenerates to uniform.
  std::size_t flagged_no_rationale_signal = 0;
  std::vector<LoadIssue> issues;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable set of resolved posts. Read-only after construction; safe
/// for concurrent readers.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<ResolvedPost> posts);

  const std::vector<ResolvedPost>& posts() const { return posts_; }
  const std::vector<std::size_t>& indices_of(Split s) const {
    return by_split_[static_cast<int>(s)];
  }
  /// community -> ids of posts whose gold_targets contain it.
  const std::map<std::string, std::vector<std::string>>& community_index() const {
    return community_index_;
  }
  bool empty() const { return posts_.empty(); }
  std::size_t size() const { return posts_.size(); }

 private:
  std::vector<ResolvedPost> posts_;
  std::array<std::vector<std::size_t>, kNumSplits> by_split_;
  std::map<std::string, std::vector<std::string>> community_index_;
};

/// Strict-majority label (count > n/2), or nullopt when no label wins.
std::optional<Label> resolve_label(std::span<const AnnotatorRecord> records);

/// Communities named by at least ceil(n/2) of the n annotators.
std::set<std::string> resolve_targets(std::span<const AnnotatorRecord> records);

/// Reason the post violates a corpus invariant, or nullopt if valid.
std::optional<std::string> validate_post(const Post& post);

/// Validates and majority-resolves in-memory posts. Invalid or
/// majority-less posts are dropped and counted in the summary.
Corpus resolve_corpus(std::vector<Post> posts, LoadSummary* summary = nullptr);

/// Loads a corpus JSON file (see README for the schema). Throws
/// CorpusError on unreadable files or malformed JSON; per-post schema
/// violations exclude the post and are recorded in the summary.
Corpus load_corpus(const std::filesystem::path& path, LoadSummary* summary = nullptr);

}  // namespace toxattn
