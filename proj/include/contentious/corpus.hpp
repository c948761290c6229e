#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace contentious {

/// Author sentinel for accounts deleted since posting.
inline constexpr std::string_view kDeletedAuthor = "[deleted]";

struct Comment {
  std::string id;
  std::string author{kDeletedAuthor};
  std::string body;
  std::int64_t created_utc = 0;
  std::string parent_id;
};

/// One thread: the OP's title and selftext plus comments in posted order,
/// i.e. sorted by (created_utc, id).
struct Conversation {
  std::string id;
  std::string subreddit;
  std::string title;
  std::string selftext;
  std::string author{kDeletedAuthor};
  std::int64_t created_utc = 0;
  double upvote_ratio = 0.0;
  std::vector<Comment> comments;

  /// Post text as one unit: title, a space, selftext.
  std::string post_text() const { return selftext.empty() ? title : title + " " + selftext; }
};

/// Restores the (created_utc, id) comment order.
void sort_comments(Conversation& conv);

struct TopicSpec {
  std::string name;
  std::vector<std::string> keywords;  // lowercase, trimmed, whitespace-collapsed

  /// Normalizes the keyword phrases; throws ConfigError when none remain.
  static TopicSpec make(std::string name, const std::vector<std::string>& keywords);
};

/// JSON `{name, keywords: [...]}`.
TopicSpec load_topic_spec(const std::filesystem::path& path);

enum class DumpSchema {
  ConversationJsonl,  // one conversation object per line, comments nested
};

DumpSchema parse_dump_schema(std::string_view id);
std::string_view to_string(DumpSchema schema);

struct Reject {
  std::size_t line_no = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<Conversation> conversations;
  std::vector<Reject> rejects;
};

/// Parses a JSONL dump. Malformed lines and records missing id, title or
/// upvote_ratio are skipped and listed in `rejects`; an unreadable file
/// throws IoError. Lines carrying a `_meta` object are artifact headers and
/// are skipped silently.
IngestResult ingest(const std::filesystem::path& path, DumpSchema schema = DumpSchema::ConversationJsonl);
IngestResult ingest(std::istream& in, DumpSchema schema = DumpSchema::ConversationJsonl);

/// Throws FormatError with the reason when a required field is missing or
/// out of range.
Conversation conversation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Conversation& conv);

/// Rejects report, one `{line_no, reason}` object per line.
void write_rejects(std::ostream& out, const std::vector<Reject>& rejects);

/// True when any keyword phrase occurs on token boundaries in the title,
/// selftext or a comment body (case-insensitive).
bool matches_topic(const Conversation& conv, const TopicSpec& topic);

std::vector<Conversation> filter_topic(const std::vector<Conversation>& convs, const TopicSpec& topic);

enum class Label : int { NonContentious = 0, Contentious = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view s);

struct LabeledConversation {
  Conversation conversation;
  Label label = Label::NonContentious;
  double quartile_threshold = 0.0;
};

nlohmann::json to_json(const LabeledConversation& lc);
LabeledConversation labeled_from_json(const nlohmann::json& j);

/// Minimum upvote ratio a conversation needs to take part in labeling.
inline constexpr double kEligibleRatio = 0.5;

struct LabelingResult {
  std::vector<LabeledConversation> labeled;
  double threshold = 0.0;
  std::size_t n_discarded = 0;  // ratio below kEligibleRatio

  std::size_t contentious_count() const;
};

/// 25th percentile by nearest rank: the ceil(n/4)-th smallest value.
/// Throws DataError on empty input.
double nearest_rank_quartile(std::vector<double> values);

/// Drops conversations below the eligibility ratio, then marks every
/// conversation at or below the bottom-quartile threshold contentious.
/// Input order is preserved. Throws DataError when nothing is eligible.
LabelingResult label(const std::vector<Conversation>& convs);

enum class LabelScope { PerTopic, Global };

LabelScope parse_label_scope(std::string_view s);

/// Labels several topic corpora: one threshold per corpus (PerTopic) or one
/// pooled threshold applied to all of them (Global).
std::vector<LabelingResult> label_groups(const std::vector<std::vector<Conversation>>& groups, LabelScope scope);

}  // namespace contentious
