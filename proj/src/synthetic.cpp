#include "contentious/synthetic.hpp"

#include <array>
#include <cmath>
#include <random>

#include "contentious/errors.hpp"
#include "contentious/random.hpp"

namespace contentious {

namespace {

// Every generated document uses each filler word at least once, so the
// words reach document frequency 1 and max_df pruning removes them; texts
// still differ in length and word order.
constexpr std::array<std::string_view, 6> kFiller = {"policy", "people", "law", "vote", "debate", "rights"};

constexpr std::array<std::string_view, 3> kSubreddits = {"politics", "news", "askreddit"};

std::string filler(std::mt19937_64& rng) {
  std::vector<std::string_view> words;
  for (auto w : kFiller)
    for (std::uint64_t r = 1 + uniform_below(rng, 3); r > 0; --r) words.push_back(w);
  fisher_yates(words, rng);
  std::string out;
  for (auto w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Exactly round(rate * n) of n slots set, at shuffled positions.
std::vector<bool> planted(std::size_t n, double rate, std::mt19937_64& rng) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<bool> out(n, false);
  for (std::size_t i = 0; i < k && i < n; ++i) out[i] = true;
  fisher_yates(out, rng);
  return out;
}

}  // namespace

std::vector<Conversation> synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.n_conversations < 2) throw ConfigError("synthetic corpus needs at least 2 conversations");
  if (spec.placement == SignalPlacement::LastComment && spec.comments_per_conversation == 0)
    throw ConfigError("last-comment placement needs comments");
  std::mt19937_64 rng(spec.seed);
  const std::size_t n_pos = spec.n_conversations / 2;
  const std::size_t n_neg = spec.n_conversations - n_pos;
  const auto pos_mark = planted(n_pos, spec.contentious_rate, rng);
  const auto neg_mark = planted(n_neg, spec.non_contentious_rate, rng);

  std::vector<Conversation> out;
  out.reserve(spec.n_conversations);
  for (std::size_t i = 0; i < spec.n_conversations; ++i) {
    const bool contentious = i < n_pos;
    const bool mark = contentious ? pos_mark[i] : neg_mark[i - n_pos];
    Conversation c;
    c.id = "s" + std::to_string(i);
    c.subreddit = std::string(kSubreddits[uniform_below(rng, kSubreddits.size())]);
    c.author = "user" + std::to_string(uniform_below(rng, 50));
    c.created_utc = 1500000000 + static_cast<std::int64_t>(i) * 3600;
    c.upvote_ratio = contentious ? 0.55 : 0.6 + 0.39 * uniform_unit(rng);
    c.title = filler(rng);
    c.selftext = filler(rng);
    if (mark && spec.placement == SignalPlacement::Post) c.selftext += " " + spec.token;
    for (std::size_t k = 0; k < spec.comments_per_conversation; ++k) {
      Comment cm;
      cm.id = c.id + "c" + std::to_string(k);
      cm.author = "user" + std::to_string(uniform_below(rng, 50));
      cm.body = filler(rng);
      cm.created_utc = c.created_utc + 60 * static_cast<std::int64_t>(k + 1);
      cm.parent_id = "t3_" + c.id;
      if (mark && spec.placement == SignalPlacement::LastComment && k + 1 == spec.comments_per_conversation)
        cm.body += " " + spec.token;
      c.comments.push_back(std::move(cm));
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace contentious
