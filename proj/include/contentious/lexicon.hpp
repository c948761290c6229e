#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace contentious {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercased word tokens plus sentence boundaries. Sentence spans are
/// half-open [begin, end) token ranges that are disjoint, ordered and cover
/// every token; sentences without tokens are never emitted.
struct TokenStream {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> sentence_spans;

  std::span<const std::string> sentence(std::size_t i) const {
    const auto [b, e] = sentence_spans.at(i);
    return std::span<const std::string>(tokens).subspan(b, e - b);
  }
  std::size_t sentence_count() const { return sentence_spans.size(); }
};

/// Splits UTF-8 text into lowercase word tokens (letters and digits; an
/// apostrophe between two word characters stays inside the token). A
/// sentence ends at `.`, `!` or `?` followed by whitespace or end of text.
TokenStream tokenize(std::string_view text);

/// Tokens only, sentence structure dropped.
std::vector<std::string> tokenize_words(std::string_view text);

/// Full-text lowercase (ASCII plus common Latin/Greek/Cyrillic ranges).
std::string to_lower_utf8(std::string_view text);

// ---------------------------------------------------------------------------
// Sentiment
// ---------------------------------------------------------------------------

struct SentimentLexicon {
  std::unordered_map<std::string, double> entries;
  std::unordered_set<std::string> negators;
  double negation_scale = 0.74;
  double normalization_alpha = 15.0;
  std::size_t negation_window = 3;

  /// Throws ConfigError when scale/alpha/window violate their ranges.
  void validate() const;
};

/// TSV `token<TAB>valence` with `#negator <tok>`, `#negation_scale <x>`,
/// `#alpha <x>` and `#negation_window <n>` header directives. Other `#`
/// lines are comments.
SentimentLexicon parse_sentiment_lexicon(std::istream& in);
SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& path);

/// Compound score of one sentence in (-1, 1): valences are summed (flipped
/// and damped by -negation_scale when a negator sits within the preceding
/// window) and squashed with x / sqrt(x^2 + alpha).
double sentiment_score(std::span<const std::string> sentence, const SentimentLexicon& lex);

/// One score per sentence of the stream.
std::vector<double> sentence_scores(const TokenStream& stream, const SentimentLexicon& lex);

// ---------------------------------------------------------------------------
// Category counting
// ---------------------------------------------------------------------------

class CategoryLexicon {
 public:
  CategoryLexicon() = default;
  explicit CategoryLexicon(std::vector<std::string> categories);

  /// `pattern` is a lowercase token, or a prefix when it ends with `*`.
  /// Throws FormatError for categories not declared in the header.
  void add_pattern(std::string_view pattern, const std::vector<std::string>& categories);

  const std::vector<std::string>& categories() const { return categories_; }
  std::size_t dimension() const { return categories_.size(); }

  /// Categories of the single pattern deciding this token: the exact entry
  /// when present, otherwise the longest matching prefix. Ascending order.
  std::vector<std::size_t> match(std::string_view token) const;

  std::size_t max_categories_per_pattern() const { return max_per_pattern_; }

 private:
  std::vector<std::string> categories_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> exact_;
  std::unordered_map<std::string, std::vector<std::size_t>> prefix_;
  std::size_t max_prefix_len_ = 0;
  std::size_t max_per_pattern_ = 0;
};

/// TSV `pattern<TAB>cat[,cat...]` preceded by a `#categories c1,c2,...`
/// header that fixes the vector order.
CategoryLexicon parse_category_lexicon(std::istream& in);
CategoryLexicon load_category_lexicon(const std::filesystem::path& path);

/// Per-category occurrence counts, in lexicon category order.
std::vector<std::int64_t> category_counts(std::span<const std::string> tokens, const CategoryLexicon& lex);

}  // namespace contentious
