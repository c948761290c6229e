#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "contentious/corpus.hpp"
#include "contentious/feature_map.hpp"

namespace contentious {

/// Environment variable the remote API key is read from.
inline constexpr const char* kToxicityApiKeyEnv = "TOXICITY_API_KEY";

enum class ToxicityMode { Remote, OfflineLexicon };

ToxicityMode parse_toxicity_mode(std::string_view s);
std::string_view to_string(ToxicityMode mode);

struct ToxicityClientConfig {
  std::string endpoint_url;  // e.g. https://host/v1alpha1/comments:analyze
  std::string api_key;
  double max_requests_per_second = 1.0;
  int max_in_flight = 4;
  int retry_limit = 3;  // retries after the first attempt
  ToxicityMode mode = ToxicityMode::OfflineLexicon;
  std::chrono::milliseconds retry_backoff{200};
  std::chrono::milliseconds timeout{10000};
  /// When false, a text that still fails after retry_limit retries raises
  /// ServiceError instead of being scored offline.
  bool allow_offline_fallback = true;

  /// Throws ConfigError on non-positive limits, or, in remote mode, a
  /// missing endpoint or API key.
  void validate() const;
};

/// Tokens counted by the offline scorer.
struct ToxicityLexicon {
  std::unordered_set<std::string> tokens;
};

/// One lowercase token per line; `#` starts a comment.
ToxicityLexicon load_toxicity_lexicon(const std::filesystem::path& path);

/// (# toxic tokens) / (# tokens), 0 for text without tokens.
double offline_toxicity(std::string_view text, const ToxicityLexicon& lex);

/// Scores for one conversation. `fallback_texts` lists texts whose remote
/// scoring failed and were scored offline instead; text index 0 is the
/// title, 1 the selftext, 2 + i comment i.
struct ToxicityAnnotation {
  double title_toxicity = 0.0;
  double selftext_toxicity = 0.0;
  std::vector<double> comment_toxicities;
  std::vector<std::size_t> fallback_texts;

  /// Keeps the first `n_comments` comment scores (and their fallback flags).
  ToxicityAnnotation prefix(std::size_t n_comments) const;
};

nlohmann::json to_json(const ToxicityAnnotation& ann);
ToxicityAnnotation toxicity_from_json(const nlohmann::json& j);

/// title_toxicity, selftext_toxicity, max_comment_toxicity and
/// avg_comment_toxicity; comment aggregates are 0 without comments.
FeatureMap toxicity_features(const ToxicityAnnotation& ann);

/// Token bucket with capacity one: consecutive grants are at least
/// 1/rate seconds apart.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TokenBucket(double rate_per_second);

  /// Blocks until a token is available and returns the grant time.
  Clock::time_point acquire();

 private:
  std::mutex mu_;
  Clock::duration interval_;
  std::optional<Clock::time_point> next_;
};

/// sha256(text) -> score store backed by an append-only TSV file.
/// Concurrent readers, serialized writers.
class ScoreCache {
 public:
  ScoreCache() = default;  // memory only
  explicit ScoreCache(std::filesystem::path path);

  std::optional<double> get(std::string_view text) const;
  void put(std::string_view text, double score);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, double> scores_;
};

struct ScorerStats {
  std::size_t texts = 0;
  std::size_t empty = 0;
  std::size_t cache_hits = 0;
  std::size_t remote_ok = 0;
  std::size_t requests = 0;  // HTTP attempts, retries included
  std::size_t retries = 0;
  std::size_t fallbacks = 0;
  std::size_t offline = 0;
};

class ToxicityScorer {
 public:
  ToxicityScorer(ToxicityClientConfig config, ToxicityLexicon offline, ScoreCache* cache = nullptr);

  ToxicityAnnotation score(const Conversation& conv);

  /// Scores every text of every conversation; remote requests for distinct
  /// texts run on up to max_in_flight workers. Output order follows input.
  /// Throws ConfigError when the service rejects the API key.
  std::vector<ToxicityAnnotation> score_all(const std::vector<Conversation>& convs);

  /// Grant times of every HTTP attempt, in grant order.
  std::vector<TokenBucket::Clock::time_point> request_trace() const;
  ScorerStats stats() const;
  const ToxicityClientConfig& config() const { return config_; }

 private:
  struct RemoteResult {
    std::optional<double> score;
    std::string error;
  };
  RemoteResult fetch_with_retries(const std::string& text);

  ToxicityClientConfig config_;
  ToxicityLexicon offline_;
  ScoreCache* cache_;
  TokenBucket bucket_;
  mutable std::mutex trace_mu_;
  std::vector<TokenBucket::Clock::time_point> trace_;
  ScorerStats stats_;
};

/// Single-conversation convenience wrapper without a cache.
ToxicityAnnotation score_toxicity(const Conversation& conv, const ToxicityClientConfig& config,
                                  const ToxicityLexicon& offline);

/// Request body in the scorer's wire format.
nlohmann::json toxicity_request_body(std::string_view text);

/// Reads attributeScores.TOXICITY.summaryScore.value; nullopt when absent or
/// outside [0, 1].
std::optional<double> parse_toxicity_response(std::string_view body);

}  // namespace contentious
