#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "contentious/errors.hpp"
#include "contentious/explain.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace contentious;

namespace {

TrainedModel model_with(std::vector<std::pair<std::string, double>> coefs) {
  TrainedModel m;
  for (auto& [n, b] : coefs) {
    m.feature_names.push_back(n);
    m.coefficients.push_back(b);
    m.means.push_back(0.0);
    m.stds.push_back(1.0);
  }
  return m;
}

std::vector<std::string> names(const std::vector<OddsRatioEntry>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.feature);
  return out;
}

}  // namespace

TEST_SUITE("explain") {
  TEST_CASE("odds ratios are exp of the coefficients") {
    const auto r = odds_ratios(model_with({{"tfidf/a", 0.0}, {"toxicity/b", std::log(2.0)}, {"c", -std::log(4.0)}}));
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].odds_ratio == 1.0);
    CHECK(r.entries[1].odds_ratio == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.entries[2].odds_ratio == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.entries[0].group == "tfidf");
    CHECK(r.entries[1].group == "toxicity");
    for (const auto& e : r.entries) CHECK(e.odds_ratio == std::exp(e.coefficient));
  }

  TEST_CASE("top and bottom lists") {
    const auto r = odds_ratios(model_with({{"a", std::log(2.0)}, {"b", std::log(0.5)}, {"c", 0.0}}));
    const auto tb = top_bottom(r, 1);
    CHECK(names(tb.top) == std::vector<std::string>{"a"});
    CHECK(names(tb.bottom) == std::vector<std::string>{"b"});
    CHECK_FALSE(tb.insufficient_features);

    const auto tie = top_bottom(odds_ratios(model_with({{"b", std::log(2.0)}, {"a", std::log(2.0)}})), 1);
    CHECK(names(tie.top) == std::vector<std::string>{"a"});

    const auto few = top_bottom(r, 5);
    CHECK(few.insufficient_features);
    CHECK(few.top.size() == 3);
    const auto j = to_json(few, 5);
    CHECK(j["scale"] == "standardized");
  }

  TEST_CASE("odds ratio ranking equals coefficient ranking") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::pair<std::string, double>> coefs;
      for (int j = 0; j < 15; ++j) coefs.emplace_back("f" + std::to_string(j), g(rng));
      const auto r = odds_ratios(model_with(coefs));
      std::vector<std::size_t> by_or(r.entries.size()), by_beta(r.entries.size());
      std::iota(by_or.begin(), by_or.end(), 0);
      std::iota(by_beta.begin(), by_beta.end(), 0);
      std::stable_sort(by_or.begin(), by_or.end(),
                       [&](auto x, auto y) { return r.entries[x].odds_ratio < r.entries[y].odds_ratio; });
      std::stable_sort(by_beta.begin(), by_beta.end(), [&](auto x, auto y) { return coefs[x].second < coefs[y].second; });
      CHECK(by_or == by_beta);
    }
  }

  TEST_CASE("odds ratio csv") {
    std::ostringstream out;
    write_odds_ratio_csv(out, odds_ratios(model_with({{"tfidf/a", 0.0}})));
    CHECK(out.str().rfind("feature,group,coefficient,odds_ratio\n", 0) == 0);
    CHECK(out.str().find("tfidf/a,tfidf,0,1") != std::string::npos);
  }

  TEST_CASE("ks statistic examples") {
    const std::vector<double> a{1, 2, 3};
    const auto same = ks_two_sample(a, a);
    CHECK(same.d == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK(ks_two_sample(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1}).d == 1.0);
    const std::vector<double> x{1, 2}, y{1.5, 2.5};
    CHECK(ks_two_sample(x, y).d == 0.5);
    CHECK(oracle::ks_d(x, y) == 0.5);
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, a), DataError);
  }

  TEST_CASE("ks matches brute force, is symmetric and rank invariant") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> size(1, 30), value(0, 12);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> a(size(rng)), b(size(rng));
      for (auto& v : a) v = value(rng) * 0.5;
      for (auto& v : b) v = value(rng) * 0.5;
      const auto ab = ks_two_sample(a, b), ba = ks_two_sample(b, a);
      CHECK(ab.d == ba.d);
      CHECK(ab.d == doctest::Approx(oracle::ks_d(a, b)).epsilon(1e-15));
      CHECK(ab.p_value >= 0.0);
      CHECK(ab.p_value <= 1.0);
      auto ea = a, eb = b;
      for (auto& v : ea) v = std::exp(v) * 3 - 1;
      for (auto& v : eb) v = std::exp(v) * 3 - 1;
      CHECK(ks_two_sample(ea, eb).d == ab.d);
    }
  }

  TEST_CASE("kolmogorov series") {
    // Q(1) = 2 (e^-2 - e^-8 + e^-18 - ...)
    double q = 0.0;
    for (int j = 1; j <= 50; ++j) q += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j);
    CHECK(kolmogorov_q(1.0) == doctest::Approx(q).epsilon(1e-12));
    CHECK(kolmogorov_q(0.0) == 1.0);
    CHECK(kolmogorov_q(5.0) < 1e-20);
  }

  TEST_CASE("ks p value uses the effective sample size") {
    const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8}, b{4.5, 5.5, 6.5, 7.5, 8.5, 9.5};
    const auto r = ks_two_sample(a, b);
    const double ne = 8.0 * 6.0 / 14.0;
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * r.d;
    CHECK(r.p_value == doctest::Approx(std::clamp(kolmogorov_q(lambda), 0.0, 1.0)).epsilon(1e-15));
    CHECK(r.n_a == 8);
    CHECK(r.n_b == 6);
  }

  TEST_CASE("early curve with the signal in the post is flat") {
    SyntheticSpec spec;
    spec.placement = SignalPlacement::Post;
    const auto ex = testing::synthetic_examples(spec);
    const auto cfg = testing::tfidf_config(1);
    const auto run = cross_validate(ex, {}, cfg);
    const auto curve = early_curve(run, ex, {}, cfg);
    REQUIRE(curve.fractions.size() == 10);
    CHECK(curve.fractions.back() == 1.0);
    CHECK(curve.accuracy.back() == run.report.mean.accuracy);
    CHECK(curve.f1.back() == run.report.mean.f1);
    const auto [lo, hi] = std::minmax_element(curve.accuracy.begin(), curve.accuracy.end());
    CHECK(*hi - *lo <= 0.02);
  }

  TEST_CASE("early curve with the signal in the last comment rises") {
    SyntheticSpec spec;
    spec.placement = SignalPlacement::LastComment;
    spec.contentious_rate = 1.0;
    spec.non_contentious_rate = 0.0;
    const auto ex = testing::synthetic_examples(spec);
    const auto cfg = testing::tfidf_config(2);
    const auto run = cross_validate(ex, {}, cfg);
    const auto curve = early_curve(run, ex, {}, cfg);
    CHECK(std::abs(curve.accuracy.front() - 0.5) <= 0.1);
    CHECK(curve.accuracy.back() >= 0.95);
    std::ostringstream out;
    write_early_curve_csv(out, curve);
    CHECK(out.str().rfind("fraction,accuracy,f1\n0.1,", 0) == 0);
  }

  TEST_CASE("subreddit ks compares per-subreddit shares") {
    std::vector<LabeledConversation> lcs;
    const auto add = [&](std::string sub, Label l) {
      LabeledConversation lc;
      lc.conversation.id = std::to_string(lcs.size());
      lc.conversation.subreddit = std::move(sub);
      lc.label = l;
      lcs.push_back(lc);
    };
    add("a", Label::Contentious);
    add("a", Label::Contentious);
    add("b", Label::NonContentious);
    add("a", Label::NonContentious);
    const auto r = subreddit_ks(lcs);
    CHECK(r.subreddits == std::vector<std::string>{"a", "b"});
    CHECK(r.contentious_share == std::vector<double>{1.0, 0.0});
    CHECK(r.non_contentious_share == std::vector<double>{0.5, 0.5});
    CHECK(r.result.d == ks_two_sample(r.contentious_share, r.non_contentious_share).d);
    CHECK(to_json(r).contains("construction"));
  }
}
