#include "contentious/discourse.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "contentious/errors.hpp"
#include "contentious/lexicon.hpp"
#include "text_util.hpp"

namespace contentious {

namespace {

constexpr std::array<std::string_view, kActCount> kActNames = {
    "question", "answer", "announcement", "agree", "appreciate",
    "disagree", "negative", "elaborate",   "humor", "other",
};

bool contains(const std::vector<std::string>& set, std::string_view token) {
  return std::find(set.begin(), set.end(), token) != set.end();
}

// Lowercase, curly apostrophes folded, whitespace collapsed.
std::string normalize_for_markers(std::string_view text) {
  std::string lower = to_lower_utf8(text);
  std::string folded;
  folded.reserve(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower.compare(i, 3, "\xE2\x80\x99") == 0) {
      folded.push_back('\'');
      i += 2;
    } else {
      folded.push_back(lower[i]);
    }
  }
  return detail::collapse_spaces(folded);
}

bool any_marker(std::string_view norm, const std::vector<std::string>& markers) {
  return std::any_of(markers.begin(), markers.end(),
                     [&](const std::string& m) { return detail::contains_on_boundaries(norm, m); });
}

bool opens_with(std::string_view norm, const std::vector<std::string>& openers) {
  return std::any_of(openers.begin(), openers.end(), [&](const std::string& o) {
    return norm.starts_with(o) && !detail::word_at(norm, o.size());
  });
}

bool has_link(std::string_view norm) {
  return norm.find("http://") != std::string_view::npos || norm.find("https://") != std::string_view::npos ||
         detail::contains_on_boundaries(norm, "www.");
}

bool is_list_line(std::string_view line) {
  line = detail::trim(line);
  if (line.size() < 2) return false;
  if ((line[0] == '-' || line[0] == '*' || line[0] == '+') && line[1] == ' ') return true;
  if (line.starts_with("\xE2\x80\xA2")) return true;  // bullet
  std::size_t digits = 0;
  while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
  return digits > 0 && digits + 1 < line.size() && (line[digits] == '.' || line[digits] == ')') &&
         line[digits + 1] == ' ';
}

bool has_list_structure(std::string_view text) {
  int lines = 0;
  for (auto line : detail::split(text, '\n'))
    if (is_list_line(line)) ++lines;
  return lines >= 2;
}

std::string strip_kind_prefix(std::string_view id) {
  if (id.size() > 3 && id[0] == 't' && id[2] == '_' && id[1] >= '1' && id[1] <= '6') id.remove_prefix(3);
  return std::string(id);
}

}  // namespace

std::string_view to_string(DiscourseAct act) { return kActNames.at(static_cast<std::size_t>(act)); }

std::optional<DiscourseAct> parse_act(std::string_view s) {
  for (std::size_t i = 0; i < kActCount; ++i)
    if (kActNames[i] == s) return kAllActs[i];
  return std::nullopt;
}

const DiscourseRules& DiscourseRules::defaults() {
  static const DiscourseRules rules = [] {
    DiscourseRules r;
    r.wh_words = {"what", "why", "how", "when", "where", "who", "whom", "whose", "which"};
    r.aux_words = {"is",     "are",    "was",     "were",    "do",      "does",     "did",      "can",
                   "could",  "would",  "should",  "will",    "shall",   "has",      "have",     "had",
                   "may",    "might",  "am",      "isn't",   "aren't",  "wasn't",   "weren't",  "don't",
                   "doesn't", "didn't", "can't",  "couldn't", "wouldn't", "shouldn't", "won't", "hasn't",
                   "haven't"};
    r.subjects = {"i",    "you",  "he",      "she",    "it",     "we",      "they",     "this",    "that",
                  "these", "those", "there", "anyone", "anybody", "someone", "somebody", "everyone", "the",
                  "a",    "an",   "your",    "my",     "his",    "her",     "their",    "our"};
    r.disagree_markers = {"disagree", "wrong", "no way", "that's not", "not true", "nope"};
    r.agree_markers = {"agree", "agreed", "exactly", "absolutely right", "well said"};
    r.agree_openers = {"this.", "this!"};
    r.appreciate_markers = {"thanks", "thank you", "thx", "appreciate", "appreciated", "grateful", "cheers"};
    r.negative_markers = {"idiot", "idiots", "stupid", "moron",    "morons",  "dumb",   "pathetic", "shut up",
                          "disgusting", "ridiculous", "garbage", "trash", "clown", "hypocrite", "liar", "scum"};
    r.humor_markers = {"lol", "lmao", "rofl", "haha", "hahaha", "/s", "jk"};
    return r;
  }();
  return rules;
}

DiscourseAct tag_discourse(std::string_view text, TextPosition position, std::optional<DiscourseAct> parent_act,
                           const DiscourseRules& rules) {
  const std::string norm = normalize_for_markers(text);
  const auto tokens = tokenize_words(text);
  const std::string_view trimmed = detail::trim(norm);

  const bool wh_start = !tokens.empty() && contains(rules.wh_words, tokens[0]);
  const bool aux_inversion =
      tokens.size() >= 2 && contains(rules.aux_words, tokens[0]) && contains(rules.subjects, tokens[1]);
  if ((!trimmed.empty() && trimmed.back() == '?') || wh_start || aux_inversion) return DiscourseAct::Question;
  if (any_marker(norm, rules.disagree_markers)) return DiscourseAct::Disagree;
  if (any_marker(norm, rules.agree_markers) || opens_with(trimmed, rules.agree_openers))
    return DiscourseAct::Agree;
  if (any_marker(norm, rules.appreciate_markers)) return DiscourseAct::Appreciate;
  if (any_marker(norm, rules.negative_markers)) return DiscourseAct::Negative;
  if (position == TextPosition::Comment && parent_act == DiscourseAct::Question) return DiscourseAct::Answer;
  if (position == TextPosition::Post && (has_list_structure(text) || has_link(norm)))
    return DiscourseAct::Announcement;
  if (any_marker(norm, rules.humor_markers)) return DiscourseAct::Humor;
  if (tokens.size() > rules.elaborate_min_tokens) return DiscourseAct::Elaborate;
  return DiscourseAct::Other;
}

SidecarActs parse_sidecar_acts(std::istream& in) {
  SidecarActs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = detail::split(trimmed, '\t');
    if (fields.size() != 3) throw FormatError("expected conversation_id<TAB>index<TAB>act", line_no);
    const std::string index_str(detail::trim(fields[1]));
    std::size_t index = 0;
    try {
      std::size_t used = 0;
      index = std::stoul(index_str, &used);
      if (used != index_str.size() || index_str.front() == '-') throw std::invalid_argument("index");
    } catch (const std::logic_error&) {
      throw FormatError("bad sequence index '" + index_str + "'", line_no);
    }
    const auto act_name = detail::trim(fields[2]);
    const auto act = parse_act(act_name);
    if (!act) throw FormatError("unknown discourse act '" + std::string(act_name) + "'", line_no);
    out.by_conversation[std::string(detail::trim(fields[0]))][index] = {*act, line_no};
  }
  return out;
}

SidecarActs read_sidecar_acts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sidecar " + path.string());
  return parse_sidecar_acts(in);
}

ActSequence tag_conversation(const Conversation& conv, const SidecarActs& sidecar, const DiscourseRules& rules) {
  const std::map<std::size_t, SidecarActs::Entry>* overrides = nullptr;
  if (const auto it = sidecar.by_conversation.find(conv.id); it != sidecar.by_conversation.end()) {
    overrides = &it->second;
    if (!overrides->empty() && overrides->rbegin()->first > conv.comments.size())
      throw FormatError("sidecar index " + std::to_string(overrides->rbegin()->first) + " out of range for '" +
                            conv.id + "'",
                        overrides->rbegin()->second.line_no);
  }
  auto override_at = [&](std::size_t i) -> std::optional<DiscourseAct> {
    if (!overrides) return std::nullopt;
    const auto it = overrides->find(i);
    if (it == overrides->end()) return std::nullopt;
    return it->second.act;
  };

  ActSequence seq;
  seq.reserve(conv.comments.size() + 1);
  seq.push_back(override_at(0).value_or(tag_discourse(conv.post_text(), TextPosition::Post, std::nullopt, rules)));

  std::unordered_map<std::string, DiscourseAct> by_comment_id;
  for (std::size_t i = 0; i < conv.comments.size(); ++i) {
    const auto& c = conv.comments[i];
    std::optional<DiscourseAct> parent;
    const auto parent_id = strip_kind_prefix(c.parent_id);
    if (parent_id.empty() || parent_id == conv.id) {
      parent = seq[0];
    } else if (const auto it = by_comment_id.find(parent_id); it != by_comment_id.end()) {
      parent = it->second;
    }
    const auto act = override_at(i + 1).value_or(tag_discourse(c.body, TextPosition::Comment, parent, rules));
    seq.push_back(act);
    by_comment_id.emplace(c.id, act);
  }
  return seq;
}

std::map<std::string, ActSequence> load_sidecar_acts(const std::filesystem::path& path,
                                                     const std::vector<Conversation>& convs,
                                                     const DiscourseRules& rules) {
  const auto sidecar = read_sidecar_acts(path);
  std::map<std::string, ActSequence> out;
  for (const auto& c : convs) out[c.id] = tag_conversation(c, sidecar, rules);
  return out;
}

FeatureMap ActNgrams::features() const {
  FeatureMap out;
  for (std::size_t a = 0; a < kActCount; ++a) {
    if (unigrams[a] != 0.0) out["uni_" + std::string(kActNames[a])] = unigrams[a];
    for (std::size_t b = 0; b < kActCount; ++b) {
      const double v = bigrams[a * kActCount + b];
      if (v != 0.0) out["bi_" + std::string(kActNames[a]) + "_" + std::string(kActNames[b])] = v;
    }
  }
  return out;
}

ActNgrams act_ngrams(const ActSequence& seq) {
  ActNgrams out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto a = static_cast<std::size_t>(seq[i]);
    out.unigrams[a] += 1.0;
    if (i + 1 < seq.size()) out.bigrams[a * kActCount + static_cast<std::size_t>(seq[i + 1])] += 1.0;
  }
  return out;
}

}  // namespace contentious
