#include "toxattn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

namespace toxattn {

namespace {
using nlohmann::json;
}  // namespace

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Hatespeech: return "hatespeech";
    case Label::Offensive: return "offensive";
    case Label::Normal: return "normal";
  }
  return "?";
}

std::optional<Label> label_from_string(std::string_view s) {
  if (s == "hatespeech") return Label::Hatespeech;
  if (s == "offensive") return Label::Offensive;
  if (s == "normal") return Label::Normal;
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

Corpus::Corpus(std::vector<ResolvedPost> posts) : posts_(std::move(posts)) {
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const ResolvedPost& rp = posts_[i];
    by_split_[static_cast<int>(rp.post.split)].push_back(i);
    for (const std::string& community : rp.gold_targets) {
      community_index_[community].push_back(rp.post.id);
    }
  }
}

std::optional<Label> resolve_label(std::span<const AnnotatorRecord> records) {
  std::array<std::size_t, kNumLabels> counts{};
  for (const AnnotatorRecord& r : records) {
    ++counts[static_cast<int>(r.label)];
  }
  const std::size_t n = records.size();
  for (int l = 0; l < kNumLabels; ++l) {
    if (counts[l] * 2 > n) return static_cast<Label>(l);
  }
  return std::nullopt;
}

std::set<std::string> resolve_targets(std::span<const AnnotatorRecord> records) {
  std::map<std::string, std::size_t> counts;
  for (const AnnotatorRecord& r : records) {
    for (const std::string& t : r.targets) ++counts[t];
  }
  const std::size_t threshold = (records.size() + 1) / 2;  // ceil(n/2)
  std::set<std::string> out;
  for (const auto& [community, count] : counts) {
    if (count >= threshold) out.insert(community);
  }
  return out;
}

std::optional<std::string> validate_post(const Post& post) {
  if (post.tokens.empty()) return "tokens empty";
  if (post.annotators.empty()) return "no annotators";
  for (std::size_t a = 0; a < post.annotators.size(); ++a) {
    const AnnotatorRecord& rec = post.annotators[a];
    if (rec.rationale.empty()) {
      if (rec.label != Label::Normal) {
        return "annotator " + std::to_string(a) +
               ": rationale absent for non-normal label";
      }
      continue;
    }
    if (rec.rationale.size() != post.tokens.size()) {
      return "annotator " + std::to_string(a) + ": rationale length " +
             std::to_string(rec.rationale.size()) + " != token count " +
             std::to_string(post.tokens.size());
    }
    for (std::uint8_t bit : rec.rationale) {
      if (bit > 1) {
        return "annotator " + std::to_string(a) + ": rationale entry not in {0,1}";
      }
    }
  }
  return std::nullopt;
}

Corpus resolve_corpus(std::vector<Post> posts, LoadSummary* summary) {
  LoadSummary local;
  LoadSummary& sum = summary ? *summary : local;
  sum.total += posts.size();

  std::vector<ResolvedPost> resolved;
  resolved.reserve(posts.size());
  std::set<std::string> seen_ids;

  for (Post& post : posts) {
    if (!seen_ids.insert(post.id).second) {
      ++sum.excluded_invalid;
      sum.issues.push_back({post.id, "duplicate post id"});
      continue;
    }
    if (auto reason = validate_post(post)) {
      ++sum.excluded_invalid;
      sum.issues.push_back({post.id, *reason});
      continue;
    }
    auto gold = resolve_label(post.annotators);
    if (!gold) {
      ++sum.excluded_no_majority;
      sum.issues.push_back({post.id, "no strict label majority"});
      continue;
    }

    ResolvedPost rp;
    rp.gold_label = *gold;
    rp.gold_targets = resolve_targets(post.annotators);
    rp.gold_rationale_union.assign(post.tokens.size(), 0);
    for (const AnnotatorRecord& rec : post.annotators) {
      for (std::size_t i = 0; i < rec.rationale.size(); ++i) {
        if (rec.rationale[i]) rp.gold_rationale_union[i] = 1;
      }
    }
    if (is_toxic(rp.gold_label) &&
        std::none_of(rp.gold_rationale_union.begin(), rp.gold_rationale_union.end(),
                     [](std::uint8_t b) { return b != 0; })) {
      ++sum.flagged_no_rationale_signal;
      sum.issues.push_back({post.id, "flagged: toxic gold label without rationale signal"});
    }
    rp.post = std::move(post);
    resolved.push_back(std::move(rp));
  }

  sum.loaded += resolved.size();
  return Corpus(std::move(resolved));
}

namespace {

// One JSON array element -> Post. Returns an error reason instead of
// the post when the element violates the schema.
std::optional<Post> parse_post(const json& j, std::string* reason) {
  auto fail = [&](std::string r) {
    *reason = std::move(r);
    return std::optional<Post>{};
  };
  if (!j.is_object()) return fail("post is not an object");
  if (!j.contains("id") || !j["id"].is_string()) return fail("missing string field 'id'");
  Post post;
  post.id = j["id"].get<std::string>();

  if (!j.contains("tokens") || !j["tokens"].is_array()) return fail("missing array field 'tokens'");
  for (const json& t : j["tokens"]) {
    if (!t.is_string()) return fail("non-string token");
    post.tokens.push_back(t.get<std::string>());
  }

  if (!j.contains("split") || !j["split"].is_string()) return fail("missing string field 'split'");
  auto split = split_from_string(j["split"].get<std::string>());
  if (!split) return fail("split must be one of train|val|test");
  post.split = *split;

  if (!j.contains("annotators") || !j["annotators"].is_array()) {
    return fail("missing array field 'annotators'");
  }
  for (const json& a : j["annotators"]) {
    if (!a.is_object()) return fail("annotator is not an object");
    AnnotatorRecord rec;
    if (!a.contains("label") || !a["label"].is_string()) {
      return fail("annotator missing string field 'label'");
    }
    auto label = label_from_string(a["label"].get<std::string>());
    if (!label) return fail("annotator label must be hatespeech|offensive|normal");
    rec.label = *label;

    if (a.contains("rationale")) {
      if (!a["rationale"].is_array()) return fail("rationale is not an array");
      for (const json& bit : a["rationale"]) {
        if (!bit.is_number_integer() || (bit.get<int>() != 0 && bit.get<int>() != 1)) {
          return fail("rationale entry not 0 or 1");
        }
        rec.rationale.push_back(static_cast<std::uint8_t>(bit.get<int>()));
      }
    }

    if (!a.contains("targets") || !a["targets"].is_array()) {
      return fail("annotator missing array field 'targets'");
    }
    for (const json& t : a["targets"]) {
      if (!t.is_string()) return fail("non-string target");
      rec.targets.insert(t.get<std::string>());
    }
    post.annotators.push_back(std::move(rec));
  }
  return post;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, LoadSummary* summary) {
  std::ifstream in(path);
  if (!in) {
    throw CorpusError("cannot open corpus file: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError("malformed corpus JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw CorpusError("corpus JSON must be a top-level array: " + path.string());
  }

  LoadSummary local;
  LoadSummary& sum = summary ? *summary : local;

  std::vector<Post> posts;
  posts.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::string reason;
    auto post = parse_post(doc[i], &reason);
    if (!post) {
      ++sum.total;
      ++sum.excluded_invalid;
      std::string id = doc[i].is_object() && doc[i].contains("id") && doc[i]["id"].is_string()
                           ? doc[i]["id"].get<std::string>()
                           : "#" + std::to_string(i);
      sum.issues.push_back({std::move(id), reason});
      continue;
    }
    posts.push_back(std::move(*post));
  }
  return resolve_corpus(std::move(posts), &sum);
}

}  // namespace toxattn
