#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "contentious/errors.hpp"
#include "contentious/lexicon.hpp"

using namespace contentious;

namespace {

SentimentLexicon good_lexicon() {
  SentimentLexicon lex;
  lex.entries = {{"good", 1.9}, {"bad", -2.5}};
  lex.negators = {"not"};
  return lex;
}

std::vector<std::string> toks(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

TEST_SUITE("lexicon") {
  TEST_CASE("tokenize splits words and sentences") {
    auto empty = tokenize("");
    CHECK(empty.tokens.empty());
    CHECK(empty.sentence_count() == 0);

    auto two = tokenize("Good. Bad!");
    CHECK(two.tokens == toks({"good", "bad"}));
    CHECK(two.sentence_count() == 2);

    CHECK(tokenize("don't panic").tokens == toks({"don't", "panic"}));
    CHECK(tokenize("Don\xE2\x80\x99t").tokens == toks({"don't"}));
  }

  TEST_CASE("sentence break needs whitespace or end after the terminator") {
    auto s = tokenize("Version 2.5 is out?! Yes... really");
    CHECK(s.sentence_count() == 3);
    CHECK(s.tokens == toks({"version", "2", "5", "is", "out", "yes", "really"}));
  }

  TEST_CASE("sentence spans cover every token in order") {
    auto s = tokenize("One two. Three! Four five six? seven");
    std::size_t expect = 0;
    for (const auto& [b, e] : s.sentence_spans) {
      CHECK(b == expect);
      CHECK(e > b);
      expect = e;
    }
    CHECK(expect == s.tokens.size());
  }

  TEST_CASE("tokenize lowercases non-ascii letters") {
    CHECK(tokenize("ÉCOLE Straße").tokens == toks({"école", "straße"}));
  }

  TEST_CASE("sentiment of a single valence word") {
    const auto lex = good_lexicon();
    const double expect = 1.9 / std::sqrt(1.9 * 1.9 + 15.0);
    CHECK(sentiment_score(toks({"good"}), lex) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(sentiment_score(toks({"good"}), lex) == doctest::Approx(0.44043).epsilon(1e-5));
    CHECK(sentiment_score({}, lex) == 0.0);
  }

  TEST_CASE("negation flips and damps the valence") {
    const auto lex = good_lexicon();
    const double x = -0.74 * 1.9;
    CHECK(sentiment_score(toks({"not", "good"}), lex) == doctest::Approx(x / std::sqrt(x * x + 15)).epsilon(1e-12));
    // a negator four tokens back is outside the window
    CHECK(sentiment_score(toks({"not", "a", "b", "c", "good"}), lex) > 0.0);
    CHECK(sentiment_score(toks({"not", "a", "b", "good"}), lex) < 0.0);
  }

  TEST_CASE("sentiment is odd under valence negation and bounded") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-4, 4);
    for (int trial = 0; trial < 50; ++trial) {
      SentimentLexicon pos, neg;
      pos.negators = neg.negators = {"not"};
      std::vector<std::string> sentence;
      for (int k = 0; k < 6; ++k) {
        const std::string w = "w" + std::to_string(k);
        const double v = val(rng);
        pos.entries[w] = v;
        neg.entries[w] = -v;
        sentence.push_back(rng() % 3 == 0 ? "not" : w);
      }
      const double a = sentiment_score(sentence, pos), b = sentiment_score(sentence, neg);
      CHECK(a == doctest::Approx(-b).epsilon(1e-12));
      CHECK(std::abs(a) < 1.0);
    }
  }

  TEST_CASE("sentiment lexicon file format") {
    std::istringstream in("#negator not\n#negation_scale 0.5\n#alpha 10\ngood\t2\n\nBAD\t-1.5\n");
    const auto lex = parse_sentiment_lexicon(in);
    CHECK(lex.negation_scale == 0.5);
    CHECK(lex.normalization_alpha == 10.0);
    CHECK(lex.negators.contains("not"));
    CHECK(lex.entries.at("bad") == -1.5);

    std::istringstream bad("good two\n");
    CHECK_THROWS_AS(parse_sentiment_lexicon(bad), FormatError);
    std::istringstream bad_scale("#negation_scale 2\n");
    CHECK_THROWS_AS(parse_sentiment_lexicon(bad_scale), ConfigError);
  }

  TEST_CASE("category counts with wildcard and exact patterns") {
    CategoryLexicon lex({"friends", "you"});
    lex.add_pattern("friend*", {"friends"});
    lex.add_pattern("you", {"you"});
    const auto counts = category_counts(toks({"you", "and", "your", "friend"}), lex);
    CHECK(counts == std::vector<std::int64_t>{1, 1});
    CHECK(category_counts({}, lex) == std::vector<std::int64_t>{0, 0});
  }

  TEST_CASE("a token matching a multi-category pattern increments each category") {
    CategoryLexicon lex({"posemo", "affect", "other"});
    lex.add_pattern("happ*", {"posemo", "affect"});
    CHECK(category_counts(toks({"happiness"}), lex) == std::vector<std::int64_t>{1, 1, 0});
  }

  TEST_CASE("exact entry takes precedence over a wildcard") {
    CategoryLexicon lex({"a", "b"});
    lex.add_pattern("kind*", {"a"});
    lex.add_pattern("kind", {"b"});
    CHECK(category_counts(toks({"kind", "kindly"}), lex) == std::vector<std::int64_t>{1, 1});
  }

  TEST_CASE("category counts are additive and bounded") {
    std::istringstream in("#categories a,b,c\nab*\ta,b\nabc\tc\nx\ta\n");
    const auto lex = parse_category_lexicon(in);
    const auto u = toks({"abc", "abd", "x", "q"}), v = toks({"ab", "x", "abcd"});
    auto uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    const auto cu = category_counts(u, lex), cv = category_counts(v, lex), cuv = category_counts(uv, lex);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < cuv.size(); ++i) {
      CHECK(cuv[i] == cu[i] + cv[i]);
      total += cuv[i];
    }
    CHECK(total <= static_cast<std::int64_t>(uv.size() * lex.max_categories_per_pattern()));
  }

  TEST_CASE("category lexicon format errors") {
    std::istringstream no_header("you\tyou\n");
    CHECK_THROWS_AS(parse_category_lexicon(no_header), FormatError);
    std::istringstream unknown("#categories a\nfoo\tb\n");
    try {
      parse_category_lexicon(unknown);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line_no() == 2);
    }
  }

  TEST_CASE("bundled demo lexicons load") {
    const std::string dir = CONTENTIOUS_SOURCE_DIR "/data/";
    const auto cats = load_category_lexicon(dir + "liwc_demo.dic");
    CHECK(cats.dimension() == 64);
    const auto sent = load_sentiment_lexicon(dir + "sentiment_lexicon.tsv");
    CHECK(sent.entries.at("good") == 1.9);
    CHECK(sent.negators.contains("not"));
    CHECK(sent.normalization_alpha == 15.0);
  }
}
