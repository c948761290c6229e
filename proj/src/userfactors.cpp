#include "contentious/userfactors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "contentious/errors.hpp"
#include "contentious/lexicon.hpp"
#include "text_util.hpp"

namespace contentious {

using nlohmann::json;

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::Female:
      return "female";
    case Gender::Male:
      return "male";
    case Gender::Unknown:
      break;
  }
  return "unknown";
}

std::vector<UserHistory> parse_user_histories(std::istream& in) {
  std::vector<UserHistory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FormatError("user history is not a JSON object", line_no);
    try {
      UserHistory h;
      h.author = j.at("author").get<std::string>();
      if (h.author.empty()) throw FormatError("empty author", line_no);
      if (j.contains("account_created_utc") && !j["account_created_utc"].is_null())
        h.account_created_utc = j["account_created_utc"].get<std::int64_t>();
      for (const auto& p : j.value("posts", json::array())) {
        h.posts.push_back({p.value("body", std::string{}), p.value("created_utc", std::int64_t{0})});
      }
      out.push_back(std::move(h));
    } catch (const json::exception& e) {
      throw FormatError(std::string("user history: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<UserHistory> load_user_histories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open user histories " + path.string());
  return parse_user_histories(in);
}

bool GenderedNouns::is_excluded(std::string_view noun) const {
  return std::find(excluded.begin(), excluded.end(), noun) != excluded.end();
}

GenderedNouns parse_gendered_nouns(std::istream& in) {
  GenderedNouns out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos) throw FormatError("expected noun<TAB>gender", line_no);
    const auto noun = to_lower_utf8(detail::trim(t.substr(0, tab)));
    const auto label = to_lower_utf8(detail::trim(t.substr(tab + 1)));
    if (noun.empty()) throw FormatError("empty noun", line_no);
    if (label == "female") {
      out.nouns[noun] = Gender::Female;
    } else if (label == "male") {
      out.nouns[noun] = Gender::Male;
    } else {
      out.excluded.push_back(noun);
    }
  }
  return out;
}

GenderedNouns load_gendered_nouns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gendered noun list " + path.string());
  return parse_gendered_nouns(in);
}

Gazetteer parse_gazetteer(std::istream& in) {
  Gazetteer gaz;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos) throw FormatError("expected name<TAB>canonical", line_no);
    auto name = detail::collapse_spaces(to_lower_utf8(detail::trim(t.substr(0, tab))));
    auto canonical = detail::collapse_spaces(to_lower_utf8(detail::trim(t.substr(tab + 1))));
    if (name.empty() || canonical.empty()) throw FormatError("empty gazetteer field", line_no);
    gaz.max_name_tokens = std::max(gaz.max_name_tokens, tokenize_words(name).size());
    gaz.entries[std::move(name)] = std::move(canonical);
  }
  return gaz;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gazetteer " + path.string());
  return parse_gazetteer(in);
}

namespace {

constexpr std::size_t kCopulaWindow = 4;

// Words that end a noun phrase after the copula.
const std::unordered_set<std::string>& phrase_breakers() {
  static const std::unordered_set<std::string> words = {
      "of",   "and", "or",    "but",  "with",    "who",   "that", "which", "in",   "on",    "at",
      "to",   "from", "for",  "so",   "because", "if",    "when", "here",  "there", "and",  "as",
      "like", "by",  "since", "than", "about",   "after", "before", "while", "too",  "myself"};
  return words;
}

bool negates(const std::string& token) { return token == "not" || token == "never" || token == "no"; }

// Text pieces between clause punctuation; apostrophes stay inside.
std::vector<std::string_view> clauses(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool end = i == text.size();
    if (end || std::string_view(".,;:!?()[]\"\n").find(text[i]) != std::string_view::npos) {
      if (i > start) out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::optional<Gender> vote_in_clause(const std::vector<std::string>& tokens, const GenderedNouns& nouns,
                                     std::size_t phrase_start) {
  const std::size_t limit = std::min(tokens.size(), phrase_start + kCopulaWindow);
  std::optional<std::string> head;
  for (std::size_t i = phrase_start; i < limit; ++i) {
    if (negates(tokens[i])) return std::nullopt;
    if (phrase_breakers().contains(tokens[i])) break;
    head = tokens[i];
  }
  if (!head || nouns.is_excluded(*head)) return std::nullopt;
  const auto it = nouns.nouns.find(*head);
  if (it == nouns.nouns.end()) return std::nullopt;
  return it->second;
}

// Location trigger phrases; the capture starts right after them.
constexpr std::array<std::string_view, 7> kLocationTriggers = {
    "i live in ", "i'm from ", "i am in ", "i am from ", "im from ", "i'm in ", "i currently live in ",
};

std::string normalize_capture(std::string_view raw) {
  auto s = detail::collapse_spaces(raw);
  while (!s.empty() && std::string_view(",;:)('\"-").find(s.back()) != std::string_view::npos) s.pop_back();
  while (!s.empty() && std::string_view(",;:)('\"-").find(s.front()) != std::string_view::npos) s.erase(0, 1);
  return std::string(detail::trim(s));
}

std::string geocode(const std::string& capture, const Gazetteer& gaz) {
  // Longest gazetteer name found on word boundaries; earliest on ties.
  std::vector<std::size_t> starts, ends;
  for (std::size_t i = 0; i <= capture.size(); ++i) {
    const bool w_here = detail::word_at(capture, i);
    const bool w_before = detail::word_before(capture, i);
    if (w_here && !w_before) starts.push_back(i);
    if (!w_here && w_before) ends.push_back(i);
  }
  std::size_t best_len = 0;
  const std::string* best = nullptr;
  for (const auto s : starts) {
    for (const auto e : ends) {
      if (e <= s || e - s <= best_len) continue;
      const auto it = gaz.entries.find(capture.substr(s, e - s));
      if (it != gaz.entries.end()) {
        best_len = e - s;
        best = &it->second;
      }
    }
  }
  return best ? *best : capture;
}

}  // namespace

Gender extract_gender(const UserHistory& history, const GenderedNouns& nouns) {
  int female = 0;
  int male = 0;
  for (const auto& post : history.posts) {
    for (const auto clause : clauses(post.body)) {
      const auto tokens = tokenize_words(clause);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::size_t phrase_start = 0;
        if (tokens[i] == "i" && i + 1 < tokens.size() && tokens[i + 1] == "am") {
          phrase_start = i + 2;
        } else if (tokens[i] == "i'm" || tokens[i] == "im") {
          phrase_start = i + 1;
        } else {
          continue;
        }
        if (const auto vote = vote_in_clause(tokens, nouns, phrase_start)) {
          (*vote == Gender::Female ? female : male) += 1;
        }
      }
    }
  }
  if (female > male) return Gender::Female;
  if (male > female) return Gender::Male;
  return Gender::Unknown;
}

std::vector<std::string> extract_locations(const UserHistory& history, const Gazetteer& gaz) {
  std::vector<std::string> out;
  for (const auto& post : history.posts) {
    std::string text = to_lower_utf8(post.body);
    std::replace(text.begin(), text.end(), '\t', ' ');
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
      if (detail::word_before(text, pos)) continue;
      for (const auto trigger : kLocationTriggers) {
        if (text.compare(pos, trigger.size(), trigger) != 0) continue;
        const std::size_t begin = pos + trigger.size();
        std::size_t end = begin;
        while (end < text.size()) {
          const char ch = text[end];
          if (ch == '\n' || ch == ';') break;
          if ((ch == '.' || ch == '!' || ch == '?') &&
              (end + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[end + 1]))))
            break;
          ++end;
        }
        const auto capture = normalize_capture(std::string_view(text).substr(begin, end - begin));
        if (!capture.empty()) {
          auto place = geocode(capture, gaz);
          if (std::find(out.begin(), out.end(), place) == out.end()) out.push_back(std::move(place));
        }
        break;
      }
    }
  }
  return out;
}

std::array<bool, 3> prolificity(std::int64_t topic_post_count, const std::array<std::int64_t, 3>& thresholds) {
  return {topic_post_count > thresholds[0], topic_post_count > thresholds[1], topic_post_count > thresholds[2]};
}

std::optional<double> UserProfile::account_age_days_at(std::int64_t t) const {
  if (!account_created_utc) return std::nullopt;
  return std::max(0.0, static_cast<double>(t - *account_created_utc) / 86400.0);
}

std::unordered_map<std::string, std::int64_t> topic_post_counts(const std::vector<Conversation>& convs) {
  std::unordered_map<std::string, std::int64_t> counts;
  auto add = [&](const std::string& author) {
    if (!author.empty() && author != kDeletedAuthor) ++counts[author];
  };
  for (const auto& c : convs) {
    add(c.author);
    for (const auto& cm : c.comments) add(cm.author);
  }
  return counts;
}

std::map<std::string, UserProfile> build_profiles(const std::vector<UserHistory>& histories,
                                                  const std::unordered_map<std::string, std::int64_t>& post_counts,
                                                  const GenderedNouns& nouns, const Gazetteer& gaz) {
  std::map<std::string, UserProfile> profiles;
  for (const auto& [author, count] : post_counts) {
    auto& p = profiles[author];
    p.author = author;
    p.topic_post_count = count;
  }
  for (const auto& h : histories) {
    auto& p = profiles[h.author];
    p.author = h.author;
    p.gender = extract_gender(h, nouns);
    p.locations = extract_locations(h, gaz);
    p.account_created_utc = h.account_created_utc;
  }
  return profiles;
}

UserAggregates aggregate_conversation_users(const Conversation& conv,
                                            const std::map<std::string, UserProfile>& profiles) {
  std::set<std::string> participants;
  auto add = [&](const std::string& author) {
    if (!author.empty() && author != kDeletedAuthor) participants.insert(author);
  };
  add(conv.author);
  for (const auto& cm : conv.comments) add(cm.author);

  auto profile_of = [&](const std::string& author) -> const UserProfile* {
    const auto it = profiles.find(author);
    return it == profiles.end() ? nullptr : &it->second;
  };

  UserAggregates out;
  double female = 0, male = 0, unknown = 0;
  std::array<double, 3> prolific{};
  double age_sum = 0.0, age_max = 0.0;
  std::size_t age_n = 0;
  for (const auto& author : participants) {
    const auto* p = profile_of(author);
    const Gender g = p ? p->gender : Gender::Unknown;
    (g == Gender::Female ? female : g == Gender::Male ? male : unknown) += 1.0;
    if (!p) continue;
    for (const auto& loc : p->locations) out.location[loc] += 1.0;
    const auto flags = prolificity(p->topic_post_count);
    for (std::size_t k = 0; k < flags.size(); ++k) prolific[k] += flags[k] ? 1.0 : 0.0;
    if (const auto age = p->account_age_days_at(conv.created_utc)) {
      age_sum += *age;
      age_max = std::max(age_max, *age);
      ++age_n;
    }
  }

  const double n = static_cast<double>(participants.size());
  out.gender["frac_female"] = n > 0 ? female / n : 0.0;
  out.gender["frac_male"] = n > 0 ? male / n : 0.0;
  out.gender["frac_unknown_gender"] = n > 0 ? unknown / n : 1.0;
  const auto* op = conv.author == kDeletedAuthor ? nullptr : profile_of(conv.author);
  const Gender op_gender = op ? op->gender : Gender::Unknown;
  for (const auto g : {Gender::Female, Gender::Male, Gender::Unknown})
    out.gender["op_gender_" + std::string(to_string(g))] = g == op_gender ? 1.0 : 0.0;

  for (std::size_t k = 0; k < kProlificThresholds.size(); ++k)
    out.prolific["frac_prolific_" + std::to_string(kProlificThresholds[k])] = n > 0 ? prolific[k] / n : 0.0;
  out.prolific["mean_account_age_days"] = age_n ? age_sum / static_cast<double>(age_n) : 0.0;
  out.prolific["max_account_age_days"] = age_max;
  return out;
}

}  // namespace contentious
