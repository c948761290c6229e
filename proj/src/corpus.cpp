#include "contentious/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "contentious/errors.hpp"
#include "contentious/lexicon.hpp"
#include "text_util.hpp"

namespace contentious {

using nlohmann::json;

void sort_comments(Conversation& conv) {
  std::stable_sort(conv.comments.begin(), conv.comments.end(), [](const Comment& a, const Comment& b) {
    if (a.created_utc != b.created_utc) return a.created_utc < b.created_utc;
    return a.id < b.id;
  });
}

TopicSpec TopicSpec::make(std::string name, const std::vector<std::string>& keywords) {
  TopicSpec spec{std::move(name), {}};
  for (const auto& raw : keywords) {
    auto phrase = detail::collapse_spaces(to_lower_utf8(detail::trim(raw)));
    if (!phrase.empty() && std::find(spec.keywords.begin(), spec.keywords.end(), phrase) == spec.keywords.end())
      spec.keywords.push_back(std::move(phrase));
  }
  if (spec.keywords.empty()) throw ConfigError("topic '" + spec.name + "' has an empty keyword list");
  return spec;
}

TopicSpec load_topic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open topic spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("topic spec " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("keywords") || !j["keywords"].is_array())
    throw FormatError("topic spec " + path.string() + " needs a keywords array");
  std::vector<std::string> keywords;
  for (const auto& k : j["keywords"]) {
    if (!k.is_string()) throw FormatError("topic spec keywords must be strings");
    keywords.push_back(k.get<std::string>());
  }
  return TopicSpec::make(j.value("name", path.stem().string()), keywords);
}

DumpSchema parse_dump_schema(std::string_view id) {
  if (id == "conversation-jsonl") return DumpSchema::ConversationJsonl;
  throw ConfigError("unknown dump schema '" + std::string(id) + "'");
}

std::string_view to_string(DumpSchema schema) {
  switch (schema) {
    case DumpSchema::ConversationJsonl:
      return "conversation-jsonl";
  }
  return "?";
}

namespace {

// Pushshift dumps store ids and timestamps as strings or numbers depending
// on the year; accept both.
std::string id_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw FormatError(std::string("field '") + key + "' must be a string");
}

std::string text_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string author_field(const json& j) {
  auto author = text_field(j, "author");
  return author.empty() ? std::string(kDeletedAuthor) : author;
}

std::int64_t time_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return 0;
  std::int64_t t = 0;
  if (it->is_number_integer()) {
    t = it->get<std::int64_t>();
  } else if (it->is_number()) {
    t = static_cast<std::int64_t>(std::floor(it->get<double>()));
  } else if (it->is_string()) {
    try {
      std::size_t used = 0;
      const auto s = it->get<std::string>();
      t = std::stoll(s, &used);
      if (used != s.size()) throw FormatError("");
    } catch (const std::exception&) {
      throw FormatError(std::string("field '") + key + "' is not a timestamp");
    }
  } else {
    throw FormatError(std::string("field '") + key + "' is not a timestamp");
  }
  if (t < 0) throw FormatError(std::string("field '") + key + "' is negative");
  return t;
}

}  // namespace

Conversation conversation_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  Conversation c;
  c.id = id_field(j, "id");
  if (c.id.empty()) throw FormatError("missing required field 'id'");
  c.title = text_field(j, "title");
  if (detail::trim(c.title).empty()) throw FormatError("missing required field 'title'");
  const auto ratio = j.find("upvote_ratio");
  if (ratio == j.end() || ratio->is_null()) throw FormatError("missing required field 'upvote_ratio'");
  if (!ratio->is_number()) throw FormatError("field 'upvote_ratio' must be a number");
  c.upvote_ratio = ratio->get<double>();
  if (!(c.upvote_ratio >= 0.0 && c.upvote_ratio <= 1.0)) throw FormatError("field 'upvote_ratio' outside [0, 1]");
  c.subreddit = text_field(j, "subreddit");
  c.selftext = text_field(j, "selftext");
  c.author = author_field(j);
  c.created_utc = time_field(j, "created_utc");
  if (const auto comments = j.find("comments"); comments != j.end() && !comments->is_null()) {
    if (!comments->is_array()) throw FormatError("field 'comments' must be an array");
    for (const auto& cj : *comments) {
      if (!cj.is_object()) throw FormatError("comment is not an object");
      Comment cm;
      cm.id = id_field(cj, "id");
      if (cm.id.empty()) throw FormatError("comment missing 'id'");
      cm.author = author_field(cj);
      cm.body = text_field(cj, "body");
      cm.created_utc = time_field(cj, "created_utc");
      cm.parent_id = id_field(cj, "parent_id");
      c.comments.push_back(std::move(cm));
    }
  }
  sort_comments(c);
  return c;
}

json to_json(const Conversation& c) {
  json comments = json::array();
  for (const auto& cm : c.comments) {
    comments.push_back({{"id", cm.id},
                        {"author", cm.author},
                        {"body", cm.body},
                        {"created_utc", cm.created_utc},
                        {"parent_id", cm.parent_id}});
  }
  return json{{"id", c.id},
              {"subreddit", c.subreddit},
              {"title", c.title},
              {"selftext", c.selftext},
              {"author", c.author},
              {"created_utc", c.created_utc},
              {"upvote_ratio", c.upvote_ratio},
              {"comments", std::move(comments)}};
}

IngestResult ingest(std::istream& in, DumpSchema schema) {
  (void)schema;  // single schema today
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      result.rejects.push_back({line_no, "invalid JSON"});
      continue;
    }
    if (j.is_object() && j.contains("_meta")) continue;
    try {
      result.conversations.push_back(conversation_from_json(j));
    } catch (const FormatError& e) {
      result.rejects.push_back({line_no, e.what()});
    } catch (const json::exception& e) {
      result.rejects.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) throw IoError("read error while ingesting dump");
  return result;
}

IngestResult ingest(const std::filesystem::path& path, DumpSchema schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dump " + path.string());
  return ingest(in, schema);
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) out << json{{"line_no", r.line_no}, {"reason", r.reason}}.dump() << '\n';
}

bool matches_topic(const Conversation& conv, const TopicSpec& topic) {
  auto hit = [&](std::string_view text) {
    if (text.empty()) return false;
    const auto norm = detail::collapse_spaces(to_lower_utf8(text));
    return std::any_of(topic.keywords.begin(), topic.keywords.end(),
                       [&](const std::string& kw) { return detail::contains_on_boundaries(norm, kw); });
  };
  if (hit(conv.title) || hit(conv.selftext)) return true;
  return std::any_of(conv.comments.begin(), conv.comments.end(), [&](const Comment& c) { return hit(c.body); });
}

std::vector<Conversation> filter_topic(const std::vector<Conversation>& convs, const TopicSpec& topic) {
  if (topic.keywords.empty()) throw ConfigError("topic '" + topic.name + "' has an empty keyword list");
  std::vector<Conversation> kept;
  for (const auto& c : convs)
    if (matches_topic(c, topic)) kept.push_back(c);
  return kept;
}

std::string_view to_string(Label label) {
  return label == Label::Contentious ? "contentious" : "non_contentious";
}

Label parse_label(std::string_view s) {
  if (s == "contentious") return Label::Contentious;
  if (s == "non_contentious") return Label::NonContentious;
  throw FormatError("unknown label '" + std::string(s) + "'");
}

json to_json(const LabeledConversation& lc) {
  json j = to_json(lc.conversation);
  j["label"] = to_string(lc.label);
  j["quartile_threshold"] = lc.quartile_threshold;
  return j;
}

LabeledConversation labeled_from_json(const json& j) {
  LabeledConversation lc;
  lc.conversation = conversation_from_json(j);
  if (!j.contains("label") || !j["label"].is_string()) throw FormatError("labeled record missing 'label'");
  lc.label = parse_label(j["label"].get<std::string>());
  lc.quartile_threshold = j.value("quartile_threshold", 0.0);
  return lc;
}

std::size_t LabelingResult::contentious_count() const {
  return static_cast<std::size_t>(std::count_if(labeled.begin(), labeled.end(), [](const LabeledConversation& lc) {
    return lc.label == Label::Contentious;
  }));
}

double nearest_rank_quartile(std::vector<double> values) {
  if (values.empty()) throw DataError("quartile of an empty sample");
  const std::size_t rank = (values.size() + 3) / 4;  // ceil(n/4), 1-based
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

namespace {

LabelingResult apply_threshold(const std::vector<Conversation>& convs, double threshold) {
  LabelingResult out;
  out.threshold = threshold;
  for (const auto& c : convs) {
    if (c.upvote_ratio < kEligibleRatio) {
      ++out.n_discarded;
      continue;
    }
    out.labeled.push_back({c, c.upvote_ratio <= threshold ? Label::Contentious : Label::NonContentious, threshold});
  }
  return out;
}

std::vector<double> eligible_ratios(const std::vector<Conversation>& convs) {
  std::vector<double> ratios;
  for (const auto& c : convs)
    if (c.upvote_ratio >= kEligibleRatio) ratios.push_back(c.upvote_ratio);
  return ratios;
}

}  // namespace

LabelingResult label(const std::vector<Conversation>& convs) {
  auto ratios = eligible_ratios(convs);
  if (ratios.empty()) throw DataError("no conversation has an upvote ratio of at least 0.5");
  return apply_threshold(convs, nearest_rank_quartile(std::move(ratios)));
}

LabelScope parse_label_scope(std::string_view s) {
  if (s == "per-topic" || s == "per_topic") return LabelScope::PerTopic;
  if (s == "global") return LabelScope::Global;
  throw ConfigError("unknown label scope '" + std::string(s) + "'");
}

std::vector<LabelingResult> label_groups(const std::vector<std::vector<Conversation>>& groups, LabelScope scope) {
  std::vector<LabelingResult> out;
  if (scope == LabelScope::PerTopic) {
    for (const auto& g : groups) out.push_back(label(g));
    return out;
  }
  std::vector<double> pooled;
  for (const auto& g : groups) {
    auto r = eligible_ratios(g);
    pooled.insert(pooled.end(), r.begin(), r.end());
  }
  if (pooled.empty()) throw DataError("no conversation has an upvote ratio of at least 0.5");
  const double threshold = nearest_rank_quartile(std::move(pooled));
  for (const auto& g : groups) out.push_back(apply_threshold(g, threshold));
  return out;
}

}  // namespace contentious
