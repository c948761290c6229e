#include "contentious/toxicity.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "contentious/errors.hpp"
#include "contentious/hash.hpp"
#include "contentious/lexicon.hpp"
#include "text_util.hpp"

namespace contentious {

using nlohmann::json;

ToxicityMode parse_toxicity_mode(std::string_view s) {
  if (s == "remote") return ToxicityMode::Remote;
  if (s == "offline" || s == "offline_lexicon" || s == "offline-lexicon") return ToxicityMode::OfflineLexicon;
  throw ConfigError("unknown toxicity mode '" + std::string(s) + "'");
}

std::string_view to_string(ToxicityMode mode) {
  return mode == ToxicityMode::Remote ? "remote" : "offline_lexicon";
}

void ToxicityClientConfig::validate() const {
  if (!(max_requests_per_second > 0.0)) throw ConfigError("toxicity.max_requests_per_second must be > 0");
  if (max_in_flight <= 0) throw ConfigError("toxicity.max_in_flight must be > 0");
  if (retry_limit < 0) throw ConfigError("toxicity.retry_limit must be >= 0");
  if (mode != ToxicityMode::Remote) return;
  if (endpoint_url.find("://") == std::string::npos) throw ConfigError("toxicity.endpoint must be an http(s) URL");
  if (api_key.empty())
    throw ConfigError(std::string("remote toxicity scoring needs an API key in $") + kToxicityApiKeyEnv);
}

ToxicityLexicon load_toxicity_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open toxicity lexicon " + path.string());
  ToxicityLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    lex.tokens.insert(to_lower_utf8(t));
  }
  return lex;
}

double offline_toxicity(std::string_view text, const ToxicityLexicon& lex) {
  const auto tokens = tokenize_words(text);
  if (tokens.empty()) return 0.0;
  const auto toxic = std::count_if(tokens.begin(), tokens.end(),
                                   [&](const std::string& t) { return lex.tokens.contains(t); });
  return std::clamp(static_cast<double>(toxic) / static_cast<double>(tokens.size()), 0.0, 1.0);
}

ToxicityAnnotation ToxicityAnnotation::prefix(std::size_t n_comments) const {
  ToxicityAnnotation out = *this;
  if (n_comments < out.comment_toxicities.size()) out.comment_toxicities.resize(n_comments);
  std::erase_if(out.fallback_texts, [&](std::size_t i) { return i >= 2 + n_comments; });
  return out;
}

json to_json(const ToxicityAnnotation& ann) {
  return json{{"title", ann.title_toxicity},
              {"selftext", ann.selftext_toxicity},
              {"comments", ann.comment_toxicities},
              {"fallback_texts", ann.fallback_texts}};
}

ToxicityAnnotation toxicity_from_json(const json& j) {
  ToxicityAnnotation ann;
  ann.title_toxicity = j.at("title").get<double>();
  ann.selftext_toxicity = j.at("selftext").get<double>();
  ann.comment_toxicities = j.at("comments").get<std::vector<double>>();
  ann.fallback_texts = j.value("fallback_texts", std::vector<std::size_t>{});
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_range(ann.title_toxicity) || !in_range(ann.selftext_toxicity) ||
      !std::all_of(ann.comment_toxicities.begin(), ann.comment_toxicities.end(), in_range))
    throw FormatError("toxicity score outside [0, 1]");
  return ann;
}

FeatureMap toxicity_features(const ToxicityAnnotation& ann) {
  double max_c = 0.0;
  double sum_c = 0.0;
  for (const double v : ann.comment_toxicities) {
    max_c = std::max(max_c, v);
    sum_c += v;
  }
  const auto n = ann.comment_toxicities.size();
  return FeatureMap{{"title_toxicity", ann.title_toxicity},
                    {"selftext_toxicity", ann.selftext_toxicity},
                    {"max_comment_toxicity", max_c},
                    {"avg_comment_toxicity", n ? sum_c / static_cast<double>(n) : 0.0}};
}

// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double rate_per_second)
    : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_per_second))) {}

TokenBucket::Clock::time_point TokenBucket::acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = next_ && *next_ > now ? *next_ : now;
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
  return slot;
}

// ---------------------------------------------------------------------------

namespace {

std::string format_score(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;  // created on first put
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (line.empty()) continue;
    if (tab == std::string::npos) throw FormatError("toxicity cache " + path_->string() + ": bad entry", line_no);
    try {
      scores_[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    } catch (const std::logic_error&) {
      throw FormatError("toxicity cache " + path_->string() + ": bad score", line_no);
    }
  }
}

std::optional<double> ScoreCache::get(std::string_view text) const {
  const auto key = sha256_hex(text);
  std::shared_lock lock(mu_);
  const auto it = scores_.find(key);
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::put(std::string_view text, double score) {
  const auto key = sha256_hex(text);
  std::unique_lock lock(mu_);
  if (!scores_.emplace(key, score).second) return;
  if (!path_) return;
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw IoError("cannot write toxicity cache " + path_->string());
  out << key << '\t' << format_score(score) << '\n';
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return scores_.size();
}

// ---------------------------------------------------------------------------

json toxicity_request_body(std::string_view text) {
  return json{{"comment", {{"text", text}}}, {"requestedAttributes", {{"TOXICITY", json::object()}}}};
}

std::optional<double> parse_toxicity_response(std::string_view body) {
  const auto j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const json::json_pointer ptr("/attributeScores/TOXICITY/summaryScore/value");
  if (!j.contains(ptr) || !j[ptr].is_number()) return std::nullopt;
  const double v = j[ptr].get<double>();
  if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return v;
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_auth_failure(const httplib::Result& res) {
  if (res->status == 401 || res->status == 403) return true;
  return res->status == 400 && (res->body.find("API_KEY_INVALID") != std::string::npos ||
                                res->body.find("API key not valid") != std::string::npos);
}

}  // namespace

ToxicityScorer::ToxicityScorer(ToxicityClientConfig config, ToxicityLexicon offline, ScoreCache* cache)
    : config_(std::move(config)),
      offline_(std::move(offline)),
      cache_(cache),
      bucket_(config_.max_requests_per_second > 0.0 ? config_.max_requests_per_second : 1.0) {
  config_.validate();
}

ToxicityScorer::RemoteResult ToxicityScorer::fetch_with_retries(const std::string& text) {
  const auto endpoint = split_endpoint(config_.endpoint_url);
  const auto target = endpoint.path + (endpoint.path.find('?') == std::string::npos ? "?" : "&") +
                      "key=" + httplib::detail::encode_query_param(config_.api_key);
  const auto body = toxicity_request_body(text).dump();

  httplib::Client client(endpoint.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (attempt > 0) {
      const auto backoff = std::min<std::chrono::milliseconds>(config_.retry_backoff * (1 << std::min(attempt - 1, 10)),
                                                               std::chrono::milliseconds(5000));
      std::this_thread::sleep_for(backoff);
    }
    const auto granted = bucket_.acquire();
    {
      std::lock_guard lock(trace_mu_);
      trace_.push_back(granted);
      ++stats_.requests;
      if (attempt > 0) ++stats_.retries;
    }
    auto res = client.Post(target, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (is_auth_failure(res)) throw ConfigError("toxicity service rejected the API key (HTTP " +
                                                std::to_string(res->status) + ")");
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (const auto score = parse_toxicity_response(res->body)) return {score, {}};
    last_error = "malformed response";
  }
  return {std::nullopt, last_error};
}

std::vector<ToxicityAnnotation> ToxicityScorer::score_all(const std::vector<Conversation>& convs) {
  struct Slot {
    double value = 0.0;
    bool fallback = false;
  };
  // texts[i][k]: conversation i, text k (0 title, 1 selftext, 2+ comments)
  std::vector<std::vector<Slot>> slots(convs.size());
  std::vector<std::string> pending;  // distinct texts needing the remote service
  std::unordered_map<std::string, std::size_t> pending_index;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> waiting;  // pending idx -> (conv, text)

  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto& c = convs[i];
    std::vector<const std::string*> texts = {&c.title, &c.selftext};
    for (const auto& cm : c.comments) texts.push_back(&cm.body);
    slots[i].resize(texts.size());
    for (std::size_t k = 0; k < texts.size(); ++k) {
      const std::string& text = *texts[k];
      std::lock_guard lock(trace_mu_);
      ++stats_.texts;
      if (detail::trim(text).empty()) {
        ++stats_.empty;
        continue;
      }
      if (config_.mode == ToxicityMode::OfflineLexicon) {
        ++stats_.offline;
        slots[i][k].value = offline_toxicity(text, offline_);
        continue;
      }
      if (cache_) {
        if (const auto hit = cache_->get(text)) {
          ++stats_.cache_hits;
          slots[i][k].value = *hit;
          continue;
        }
      }
      auto [it, inserted] = pending_index.emplace(text, pending.size());
      if (inserted) {
        pending.push_back(text);
        waiting.emplace_back();
      }
      waiting[it->second].emplace_back(i, k);
    }
  }

  if (!pending.empty()) {
    std::vector<RemoteResult> results(pending.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mu;
    auto worker = [&] {
      while (!abort) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= pending.size()) return;
        try {
          results[idx] = fetch_with_retries(pending[idx]);
        } catch (...) {
          std::lock_guard lock(fatal_mu);
          if (!fatal) fatal = std::current_exception();
          abort = true;
        }
      }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), pending.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);

    for (std::size_t p = 0; p < pending.size(); ++p) {
      const auto& r = results[p];
      double value;
      bool fallback = false;
      if (r.score) {
        value = *r.score;
        if (cache_) cache_->put(pending[p], value);
        std::lock_guard lock(trace_mu_);
        ++stats_.remote_ok;
      } else {
        if (!config_.allow_offline_fallback)
          throw ServiceError("toxicity service failed after " + std::to_string(config_.retry_limit) +
                             " retries: " + r.error);
        value = offline_toxicity(pending[p], offline_);
        fallback = true;
        std::lock_guard lock(trace_mu_);
        ++stats_.fallbacks;
      }
      for (const auto& [i, k] : waiting[p]) {
        slots[i][k] = {value, fallback};
        if (fallback)
          std::cerr << "warning: toxicity for conversation " << convs[i].id << " text " << k
                    << " scored offline after remote failure (" << r.error << ")\n";
      }
    }
  }

  std::vector<ToxicityAnnotation> out(convs.size());
  for (std::size_t i = 0; i < convs.size(); ++i) {
    auto& ann = out[i];
    ann.title_toxicity = slots[i][0].value;
    ann.selftext_toxicity = slots[i][1].value;
    for (std::size_t k = 2; k < slots[i].size(); ++k) ann.comment_toxicities.push_back(slots[i][k].value);
    for (std::size_t k = 0; k < slots[i].size(); ++k)
      if (slots[i][k].fallback) ann.fallback_texts.push_back(k);
  }
  return out;
}

ToxicityAnnotation ToxicityScorer::score(const Conversation& conv) { return score_all({conv}).front(); }

std::vector<TokenBucket::Clock::time_point> ToxicityScorer::request_trace() const {
  std::lock_guard lock(trace_mu_);
  return trace_;
}

ScorerStats ToxicityScorer::stats() const {
  std::lock_guard lock(trace_mu_);
  return stats_;
}

ToxicityAnnotation score_toxicity(const Conversation& conv, const ToxicityClientConfig& config,
                                  const ToxicityLexicon& offline) {
  ToxicityScorer scorer(config, offline);
  return scorer.score(conv);
}

}  // namespace contentious
