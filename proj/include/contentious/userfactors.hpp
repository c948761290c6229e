#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "contentious/corpus.hpp"
#include "contentious/feature_map.hpp"

namespace contentious {

enum class Gender { Female, Male, Unknown };

std::string_view to_string(Gender g);

struct HistoryPost {
  std::string body;
  std::int64_t created_utc = 0;
};

struct UserHistory {
  std::string author;
  std::optional<std::int64_t> account_created_utc;
  std::vector<HistoryPost> posts;
};

/// JSONL `{author, account_created_utc, posts: [{body, created_utc}]}`.
/// Malformed lines throw FormatError with the line number.
std::vector<UserHistory> parse_user_histories(std::istream& in);
std::vector<UserHistory> load_user_histories(const std::filesystem::path& path);

/// Lowercase noun -> gender. Nouns marked with any other label (nonbinary,
/// indeterminate, ...) are kept as excluded markers and never vote.
struct GenderedNouns {
  std::unordered_map<std::string, Gender> nouns;
  std::vector<std::string> excluded;

  bool is_excluded(std::string_view noun) const;
};

/// TSV `noun<TAB>female|male` (other labels become excluded markers).
GenderedNouns parse_gendered_nouns(std::istream& in);
GenderedNouns load_gendered_nouns(const std::filesystem::path& path);

/// Lowercase place name -> canonical "city, region, country".
struct Gazetteer {
  std::unordered_map<std::string, std::string> entries;
  std::size_t max_name_tokens = 0;
};

/// TSV `name<TAB>canonical`.
Gazetteer parse_gazetteer(std::istream& in);
Gazetteer load_gazetteer(const std::filesystem::path& path);

/// Majority vote over self-descriptions ("i am", "i'm", "im" followed within
/// four tokens by a noun phrase whose head is a gendered noun). Ties and
/// histories without votes are Unknown.
Gender extract_gender(const UserHistory& history, const GenderedNouns& nouns);

/// Places from "i live in X", "i'm from X", "i am in X" (and close variants),
/// X running to the end of the sentence. Each capture is geocoded by the
/// longest gazetteer name it contains; otherwise the raw lowercase capture is
/// kept. Result is deduplicated in first-seen order.
std::vector<std::string> extract_locations(const UserHistory& history, const Gazetteer& gaz);

inline constexpr std::array<std::int64_t, 3> kProlificThresholds = {25, 50, 100};

/// flag_k = count > k for each threshold.
std::array<bool, 3> prolificity(std::int64_t topic_post_count,
                                const std::array<std::int64_t, 3>& thresholds = kProlificThresholds);

struct UserProfile {
  std::string author;
  Gender gender = Gender::Unknown;
  std::vector<std::string> locations;
  std::int64_t topic_post_count = 0;
  std::optional<std::int64_t> account_created_utc;

  /// Days between account creation and `t`, floored at 0; nullopt when the
  /// creation time is unknown.
  std::optional<double> account_age_days_at(std::int64_t t) const;
};

/// Posts per author across the topic corpus (submissions plus comments);
/// the deleted-author sentinel is not counted.
std::unordered_map<std::string, std::int64_t> topic_post_counts(const std::vector<Conversation>& convs);

/// Profiles for every author with a history or a topic post.
std::map<std::string, UserProfile> build_profiles(const std::vector<UserHistory>& histories,
                                                  const std::unordered_map<std::string, std::int64_t>& post_counts,
                                                  const GenderedNouns& nouns, const Gazetteer& gaz);

/// Per-conversation user aggregates, split by feature family.
struct UserAggregates {
  FeatureMap gender;    // frac_female, frac_male, frac_unknown_gender, op_gender_*
  FeatureMap location;  // canonical location -> participant count
  FeatureMap prolific;  // frac_prolific_{25,50,100}, mean/max_account_age_days
};

/// Aggregates over distinct participants (OP and commenters, deleted
/// accounts excluded). Authors without a profile count as unknown gender,
/// no location, zero posts and unknown account age. Account ages are taken
/// at the conversation's creation time.
UserAggregates aggregate_conversation_users(const Conversation& conv,
                                            const std::map<std::string, UserProfile>& profiles);

}  // namespace contentious
