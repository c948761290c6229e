#include "contentious/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "contentious/errors.hpp"
#include "text_util.hpp"

namespace contentious {

namespace {

bool is_terminator(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

}  // namespace

std::string to_lower_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = detail::decode_utf8(text, pos);
    detail::append_utf8(out, detail::lower_cp(cp));
  }
  return out;
}

TokenStream tokenize(std::string_view text) {
  TokenStream out;
  std::string current;
  std::size_t sentence_begin = 0;

  auto flush_token = [&] {
    if (!current.empty()) {
      out.tokens.push_back(std::move(current));
      current.clear();
    }
  };
  auto close_sentence = [&] {
    flush_token();
    if (out.tokens.size() > sentence_begin) {
      out.sentence_spans.emplace_back(sentence_begin, out.tokens.size());
      sentence_begin = out.tokens.size();
    }
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = detail::decode_utf8(text, pos);
    if (detail::is_word_cp(cp)) {
      detail::append_utf8(current, detail::lower_cp(cp));
      continue;
    }
    if (is_apostrophe(cp) && !current.empty()) {
      std::size_t peek = pos;
      if (peek < text.size() && detail::is_word_cp(detail::decode_utf8(text, peek))) {
        current.push_back('\'');
        continue;
      }
    }
    flush_token();
    if (is_terminator(cp)) {
      // A run like "?!" or "..." counts once; the break needs whitespace or
      // end of text after the run.
      std::size_t peek = pos;
      char32_t next = 0;
      bool at_end = true;
      while (peek < text.size()) {
        std::size_t probe = peek;
        next = detail::decode_utf8(text, probe);
        if (!is_terminator(next)) {
          at_end = false;
          break;
        }
        peek = probe;
      }
      if (at_end || detail::is_space_cp(next)) close_sentence();
      pos = peek;
    }
  }
  close_sentence();
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) { return tokenize(text).tokens; }

// ---------------------------------------------------------------------------

void SentimentLexicon::validate() const {
  if (!(negation_scale > 0.0 && negation_scale <= 1.0))
    throw ConfigError("sentiment lexicon: negation_scale must be in (0, 1]");
  if (!(normalization_alpha > 0.0)) throw ConfigError("sentiment lexicon: alpha must be > 0");
  if (negation_window == 0) throw ConfigError("sentiment lexicon: negation_window must be >= 1");
}

SentimentLexicon parse_sentiment_lexicon(std::istream& in) {
  SentimentLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = std::string(detail::trim(line));
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream directive(line.substr(1));
      std::string key, value;
      directive >> key >> value;
      try {
        if (key == "negator") {
          if (value.empty()) throw FormatError("#negator needs a token", line_no);
          lex.negators.insert(to_lower_utf8(value));
        } else if (key == "negation_scale") {
          lex.negation_scale = std::stod(value);
        } else if (key == "alpha") {
          lex.normalization_alpha = std::stod(value);
        } else if (key == "negation_window") {
          lex.negation_window = std::stoul(value);
        }
      } catch (const std::logic_error&) {
        throw FormatError("bad value for #" + key + ": '" + value + "'", line_no);
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("expected token<TAB>valence", line_no);
    const std::string token = to_lower_utf8(detail::trim(std::string_view(line).substr(0, tab)));
    double valence = 0.0;
    try {
      valence = std::stod(line.substr(tab + 1));
    } catch (const std::logic_error&) {
      throw FormatError("bad valence for '" + token + "'", line_no);
    }
    if (token.empty() || !std::isfinite(valence)) throw FormatError("bad sentiment entry", line_no);
    lex.entries[token] = valence;
  }
  lex.validate();
  return lex;
}

SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sentiment lexicon " + path.string());
  return parse_sentiment_lexicon(in);
}

double sentiment_score(std::span<const std::string> sentence, const SentimentLexicon& lex) {
  double x = 0.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto it = lex.entries.find(sentence[i]);
    if (it == lex.entries.end()) continue;
    double valence = it->second;
    const std::size_t from = i >= lex.negation_window ? i - lex.negation_window : 0;
    for (std::size_t j = from; j < i; ++j) {
      if (lex.negators.contains(sentence[j])) {
        valence *= -lex.negation_scale;
        break;
      }
    }
    x += valence;
  }
  if (x == 0.0) return 0.0;
  return x / std::sqrt(x * x + lex.normalization_alpha);
}

std::vector<double> sentence_scores(const TokenStream& stream, const SentimentLexicon& lex) {
  std::vector<double> out;
  out.reserve(stream.sentence_count());
  for (std::size_t i = 0; i < stream.sentence_count(); ++i) out.push_back(sentiment_score(stream.sentence(i), lex));
  return out;
}

// ---------------------------------------------------------------------------

CategoryLexicon::CategoryLexicon(std::vector<std::string> categories) : categories_(std::move(categories)) {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].empty()) throw FormatError("empty category name");
    if (!index_.emplace(categories_[i], i).second) throw FormatError("duplicate category '" + categories_[i] + "'");
  }
}

void CategoryLexicon::add_pattern(std::string_view pattern, const std::vector<std::string>& categories) {
  if (categories.empty()) throw FormatError("pattern '" + std::string(pattern) + "' has no category");
  std::vector<std::size_t> ids;
  for (const auto& c : categories) {
    const auto it = index_.find(c);
    if (it == index_.end()) throw FormatError("unknown category '" + c + "'");
    ids.push_back(it->second);
  }
  const bool wildcard = !pattern.empty() && pattern.back() == '*';
  const std::string key = to_lower_utf8(wildcard ? pattern.substr(0, pattern.size() - 1) : pattern);
  if (key.empty()) throw FormatError("empty pattern");
  auto& slot = wildcard ? prefix_[key] : exact_[key];
  slot.insert(slot.end(), ids.begin(), ids.end());
  std::sort(slot.begin(), slot.end());
  slot.erase(std::unique(slot.begin(), slot.end()), slot.end());
  max_per_pattern_ = std::max(max_per_pattern_, slot.size());
  if (wildcard) max_prefix_len_ = std::max(max_prefix_len_, key.size());
}

std::vector<std::size_t> CategoryLexicon::match(std::string_view token) const {
  // One entry decides per token: the exact pattern, else the longest prefix.
  if (const auto it = exact_.find(std::string(token)); it != exact_.end()) return it->second;
  for (std::size_t len = std::min(token.size(), max_prefix_len_); len >= 1; --len) {
    if (const auto it = prefix_.find(std::string(token.substr(0, len))); it != prefix_.end()) return it->second;
  }
  return {};
}

CategoryLexicon parse_category_lexicon(std::istream& in) {
  std::optional<CategoryLexicon> lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      if (trimmed.starts_with("#categories")) {
        if (lex) throw FormatError("duplicate #categories header", line_no);
        std::vector<std::string> names;
        for (auto& name : detail::split(detail::trim(trimmed.substr(11)), ','))
          names.emplace_back(detail::trim(name));
        try {
          lex.emplace(std::move(names));
        } catch (const FormatError& e) {
          throw FormatError(e.what(), line_no);
        }
      }
      continue;
    }
    if (!lex) throw FormatError("pattern before #categories header", line_no);
    const auto tab = trimmed.find('\t');
    if (tab == std::string_view::npos) throw FormatError("expected pattern<TAB>categories", line_no);
    std::vector<std::string> cats;
    for (auto& c : detail::split(trimmed.substr(tab + 1), ',')) {
      const auto name = detail::trim(c);
      if (!name.empty()) cats.emplace_back(name);
    }
    try {
      lex->add_pattern(detail::trim(trimmed.substr(0, tab)), cats);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  if (!lex) throw FormatError("category lexicon has no #categories header");
  return std::move(*lex);
}

CategoryLexicon load_category_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open category lexicon " + path.string());
  return parse_category_lexicon(in);
}

std::vector<std::int64_t> category_counts(std::span<const std::string> tokens, const CategoryLexicon& lex) {
  std::vector<std::int64_t> counts(lex.dimension(), 0);
  for (const auto& token : tokens)
    for (const auto id : lex.match(token)) ++counts[id];
  return counts;
}

}  // namespace contentious
