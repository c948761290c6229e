#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contentious/corpus.hpp"
#include "contentious/feature_map.hpp"

namespace contentious {

enum class DiscourseAct : int {
  Question,
  Answer,
  Announcement,
  Agree,
  Appreciate,
  Disagree,
  Negative,
  Elaborate,
  Humor,
  Other,
};

inline constexpr std::size_t kActCount = 10;

inline constexpr std::array<DiscourseAct, kActCount> kAllActs = {
    DiscourseAct::Question,   DiscourseAct::Answer,   DiscourseAct::Announcement, DiscourseAct::Agree,
    DiscourseAct::Appreciate, DiscourseAct::Disagree, DiscourseAct::Negative,     DiscourseAct::Elaborate,
    DiscourseAct::Humor,      DiscourseAct::Other,
};

std::string_view to_string(DiscourseAct act);
std::optional<DiscourseAct> parse_act(std::string_view s);

enum class TextPosition { Post, Comment };

/// Marker inventories for the rule cascade. Phrases are lowercase and match
/// on token boundaries; `agree_openers` only match at the start of a text.
struct DiscourseRules {
  std::vector<std::string> wh_words;
  std::vector<std::string> aux_words;
  std::vector<std::string> subjects;
  std::vector<std::string> disagree_markers;
  std::vector<std::string> agree_markers;
  std::vector<std::string> agree_openers;
  std::vector<std::string> appreciate_markers;
  std::vector<std::string> negative_markers;
  std::vector<std::string> humor_markers;
  std::size_t elaborate_min_tokens = 40;  // strictly more than this

  static const DiscourseRules& defaults();
};

/// Deterministic first-match-wins cascade:
/// question, disagree, agree, appreciate, negative, answer (comment under a
/// question), announcement (post with a list or link), humor, elaborate
/// (long text), other.
DiscourseAct tag_discourse(std::string_view text, TextPosition position, std::optional<DiscourseAct> parent_act,
                           const DiscourseRules& rules = DiscourseRules::defaults());

/// Index 0 is the post, then one act per comment in posted order.
using ActSequence = std::vector<DiscourseAct>;

/// Externally predicted acts: conversation id -> (sequence index -> act).
struct SidecarActs {
  struct Entry {
    DiscourseAct act;
    std::size_t line_no;
  };
  std::map<std::string, std::map<std::size_t, Entry>> by_conversation;

  bool empty() const { return by_conversation.empty(); }
};

/// TSV `conversation_id<TAB>index<TAB>act`. Unknown act names throw
/// FormatError carrying the line number.
SidecarActs parse_sidecar_acts(std::istream& in);
SidecarActs read_sidecar_acts(const std::filesystem::path& path);

/// Acts for one conversation. Sidecar labels win where present; every other
/// text is tagged by the rule cascade with its parent's final act. Throws
/// FormatError when a sidecar index is past the end of the sequence.
ActSequence tag_conversation(const Conversation& conv, const SidecarActs& sidecar = {},
                             const DiscourseRules& rules = DiscourseRules::defaults());

/// Sidecar file applied over the rule baseline for every conversation.
std::map<std::string, ActSequence> load_sidecar_acts(const std::filesystem::path& path,
                                                     const std::vector<Conversation>& convs,
                                                     const DiscourseRules& rules = DiscourseRules::defaults());

/// Unigram counts over the sequence and ordered-bigram counts over
/// consecutive pairs; bigram (a, b) lives at index a * kActCount + b.
struct ActNgrams {
  std::array<double, kActCount> unigrams{};
  std::array<double, kActCount * kActCount> bigrams{};

  /// Non-zero entries as `uni_<act>` / `bi_<act>_<act>`.
  FeatureMap features() const;
};

ActNgrams act_ngrams(const ActSequence& seq);

}  // namespace contentious
