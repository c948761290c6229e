#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "contentious/corpus.hpp"
#include "contentious/discourse.hpp"
#include "contentious/feature_map.hpp"
#include "contentious/lexicon.hpp"
#include "contentious/toxicity.hpp"
#include "contentious/userfactors.hpp"

namespace contentious {

enum class FeatureGroup : int {
  Tfidf,
  Discourse,
  Gender,
  Liwc,
  Location,
  Prolific,
  Sentiment,
  Toxicity,
  Subreddit,
  Embedding,
};

inline constexpr std::array<FeatureGroup, 10> kAllFeatureGroups = {
    FeatureGroup::Tfidf,    FeatureGroup::Discourse, FeatureGroup::Gender,    FeatureGroup::Liwc,
    FeatureGroup::Location, FeatureGroup::Prolific,  FeatureGroup::Sentiment, FeatureGroup::Toxicity,
    FeatureGroup::Subreddit, FeatureGroup::Embedding,
};

std::string_view to_string(FeatureGroup g);
FeatureGroup parse_feature_group(std::string_view s);

/// Comma-separated group names; "all" expands to every group except
/// embedding (which needs a sidecar).
std::set<FeatureGroup> parse_feature_groups(std::string_view csv);
std::string to_string(const std::set<FeatureGroup>& groups);

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

using SparseVector = std::map<std::size_t, double>;

struct TfidfVocabulary {
  std::vector<std::string> terms;  // sorted
  std::vector<std::int64_t> doc_freq;
  std::int64_t n_docs = 0;
  double max_df = 1.0;
  std::set<std::string> stopwords;

  std::optional<std::size_t> index_of(std::string_view term) const;
  /// ln((1 + n_docs) / (1 + df)) + 1
  double idf(std::size_t i) const;

 private:
  friend TfidfVocabulary tfidf_fit(const std::vector<std::vector<std::string>>&, double, const std::set<std::string>&);
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps tokens whose document frequency share is at most max_df and that
/// are not stopwords. Throws DataError on an empty corpus.
TfidfVocabulary tfidf_fit(const std::vector<std::vector<std::string>>& docs, double max_df,
                          const std::set<std::string>& stopwords);

/// count * smooth idf, L2-normalized; out-of-vocabulary tokens are ignored.
SparseVector tfidf_transform(std::span<const std::string> doc, const TfidfVocabulary& vocab);

/// tfidf(post text) + mean over comments of tfidf(comment body).
SparseVector conversation_text_vector(const Conversation& conv, const TfidfVocabulary& vocab);

/// Token lists fed to tfidf_fit for one conversation: the post text and
/// each comment body.
std::vector<std::vector<std::string>> conversation_documents(const Conversation& conv);

// ---------------------------------------------------------------------------
// Other feature families
// ---------------------------------------------------------------------------

/// max/min_post_sentiment over post sentences; max/min_comment_sentiment,
/// avg_comment_positive and avg_comment_negative over per-comment scores
/// (a comment's score is the mean of its sentence scores).
FeatureMap sentiment_features(const Conversation& conv, const SentimentLexicon& lex);

/// Category counts over the post text and every comment.
FeatureMap liwc_features(const Conversation& conv, const CategoryLexicon& lex);

/// Opaque per-conversation dense vectors supplied from outside.
struct EmbeddingTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> rows;
};

/// CSV with header `conversation_id,v1,...,vd`; the header fixes d.
EmbeddingTable load_embedding_sidecar(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Keeps the first ceil(fraction * n) comments in posted order.
std::size_t prefix_length(std::size_t n_comments, double fraction);
Conversation prefix_truncate(const Conversation& conv, double fraction);

struct ConversationAnnotations {
  ActSequence acts;
  ToxicityAnnotation toxicity;

  /// Annotations of the conversation truncated to `n_comments` comments.
  ConversationAnnotations prefix(std::size_t n_comments) const;
};

struct FeatureConfig {
  std::set<FeatureGroup> enabled_groups{FeatureGroup::Tfidf};
  double prefix_fraction = 1.0;
  double max_df = 0.95;
  std::size_t location_top_k = 200;
  bool standardize = true;

  void validate() const;
};

/// Lexicons and per-user data shared by every conversation.
struct FeatureResources {
  SentimentLexicon sentiment;
  CategoryLexicon categories;
  std::set<std::string> stopwords;
  std::map<std::string, UserProfile> profiles;
  std::optional<EmbeddingTable> embeddings;
};

/// Dictionaries fit on training conversations only.
struct FittedVocabularies {
  TfidfVocabulary tfidf;
  std::vector<std::string> subreddits;  // sorted
  std::vector<std::string> locations;   // top-K by training frequency
};

FittedVocabularies fit_vocabularies(std::span<const Conversation* const> train, const FeatureResources& resources,
                                    const FeatureConfig& config);

struct FeatureVector {
  std::string conversation_id;
  std::map<FeatureGroup, FeatureMap> groups;

  /// `group/name` -> value. Throws Error on a duplicate name.
  FeatureMap flatten() const;
};

/// Builds the enabled groups for one conversation (truncated to
/// config.prefix_fraction first).
FeatureVector assemble(const Conversation& conv, const ConversationAnnotations& annotations,
                       const FeatureResources& resources, const FeatureConfig& config,
                       const FittedVocabularies& vocab);

/// One term per line; '#' starts a comment.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Sparse export: `conversation_id,feature_name,value` rows, zero values
/// omitted. Names and ids are CSV-quoted when needed.
void write_feature_matrix(std::ostream& out, const std::vector<FeatureVector>& rows);

/// `conversation_id,label` rows with label 0 or 1.
void write_label_file(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels);

}  // namespace contentious
