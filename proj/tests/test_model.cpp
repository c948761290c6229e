#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "contentious/errors.hpp"
#include "contentious/model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace contentious;

namespace {

struct Problem {
  std::vector<FeatureMap> x;
  std::vector<int> y;
};

Problem random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nf(1, 10), ne(4, 50);
  std::normal_distribution<double> g(0.0, 2.0);
  const int d = nf(rng), n = ne(rng);
  Problem p;
  for (int i = 0; i < n; ++i) {
    FeatureMap row;
    for (int j = 0; j < d; ++j)
      if (rng() % 4) row["f" + std::to_string(j)] = g(rng) + j;
    p.x.push_back(row);
    p.y.push_back(i < 2 ? i : static_cast<int>(rng() % 2));
  }
  return p;
}

CvReport report_with(std::vector<double> acc) {
  CvReport r;
  for (double a : acc) r.folds.push_back(Metrics{a, a, a, a});
  r.fold_assignment.assign(acc.size(), 0);
  r.mean = CvReport::average(r.folds);
  return r;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("analytic gradient matches central differences on random problems") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_problem(rng);
      TrainOptions opts;
      opts.l2 = trial % 2 ? 0.3 : 0.0;
      opts.max_iterations = 3;
      auto m = train(std::span<const FeatureMap>(p.x), p.y, opts);
      m.intercept = g(rng);
      for (auto& b : m.coefficients) b = g(rng);
      const auto grad = nll_gradient(m, p.x, p.y);
      std::vector<double> params{m.intercept};
      params.insert(params.end(), m.coefficients.begin(), m.coefficients.end());
      REQUIRE(grad.size() == params.size());
      const auto fd = oracle::finite_difference_gradient(p.x, p.y, m, params);
      for (std::size_t j = 0; j < params.size(); ++j) CHECK(oracle::rel_error(grad[j], fd[j]) < 1e-5);
    }
  }

  TEST_CASE("gradient at zero for a single point") {
    TrainedModel m;
    m.feature_names = {"x"};
    m.means = {0.0};
    m.stds = {1.0};
    m.coefficients = {0.0};
    const std::vector<FeatureMap> x{{{"x", 1.0}}};
    const std::vector<int> y{1};
    const auto g = nll_gradient(m, x, y);
    CHECK(g[0] == -0.5);
    CHECK(g[1] == -0.5);
    m.coefficients = {2.0};
    m.l2_strength = 0.5;
    const auto g2 = nll_gradient(m, x, y);
    m.l2_strength = 0.0;
    const auto g0 = nll_gradient(m, x, y);
    CHECK(g2[0] == g0[0]);
    CHECK(g2[1] == doctest::Approx(g0[1] + 0.5 * 2.0).epsilon(1e-15));
  }

  TEST_CASE("separable toy problem") {
    const std::vector<FeatureMap> x{{{"x", -1.0}}, {{"x", 1.0}}};
    const std::vector<int> y{0, 1};
    TrainOptions opts;
    opts.l2 = 0.01;
    const auto m = train(std::span<const FeatureMap>(x), y, opts);
    CHECK(m.coefficients[0] > 0.0);
    CHECK(predict_class(predict_proba(m, x[0])) == 0);
    CHECK(predict_class(predict_proba(m, x[1])) == 1);
    CHECK(predict_proba(m, x[1]) > 0.5);
    CHECK(m.converged);
  }

  TEST_CASE("ridge limit shrinks coefficients") {
    const std::vector<FeatureMap> x{{{"x", -1.0}}, {{"x", 1.0}}, {{"x", 2.0}}};
    const std::vector<int> y{0, 1, 1};
    TrainOptions opts;
    opts.l2 = 1e6;
    const auto m = train(std::span<const FeatureMap>(x), y, opts);
    CHECK(std::abs(m.coefficients[0]) < 1e-5);
    // the slope vanishes, so every row gets the same probability between 0.5 and the majority share
    for (const auto& r : x) {
      CHECK(predict_proba(m, r) == doctest::Approx(predict_proba(m, x[0])).epsilon(1e-5));
      CHECK(predict_proba(m, r) >= 0.5);
      CHECK(predict_proba(m, r) <= 2.0 / 3.0 + 1e-12);
    }
  }

  TEST_CASE("duplicated dataset gives the same coefficients") {
    std::mt19937_64 rng(3);
    const auto p = random_problem(rng);
    auto x2 = p.x;
    auto y2 = p.y;
    x2.insert(x2.end(), p.x.begin(), p.x.end());
    y2.insert(y2.end(), p.y.begin(), p.y.end());
    TrainOptions opts;
    opts.l2 = 0.1;
    const auto a = train(std::span<const FeatureMap>(p.x), p.y, opts);
    const auto b = train(std::span<const FeatureMap>(x2), y2, opts);
    for (std::size_t j = 0; j < a.coefficients.size(); ++j)
      CHECK(b.coefficients[j] == doctest::Approx(a.coefficients[j]).epsilon(1e-5));
  }

  TEST_CASE("scaling a feature leaves probabilities unchanged") {
    std::mt19937_64 rng(11);
    auto p = random_problem(rng);
    TrainOptions opts;
    opts.l2 = 0.2;
    const auto a = train(std::span<const FeatureMap>(p.x), p.y, opts);
    auto scaled = p.x;
    for (auto& row : scaled)
      if (row.count("f0")) row["f0"] *= 37.5;
    const auto b = train(std::span<const FeatureMap>(scaled), p.y, opts);
    for (std::size_t i = 0; i < p.x.size(); ++i)
      CHECK(predict_proba(b, scaled[i]) == doctest::Approx(predict_proba(a, p.x[i])).epsilon(1e-7));
  }

  TEST_CASE("accepted steps never increase the loss") {
    std::mt19937_64 rng(5);
    const auto p = random_problem(rng);
    TrainOptions opts;
    opts.record_loss = true;
    const auto m = train(std::span<const FeatureMap>(p.x), p.y, opts);
    REQUIRE(m.loss_trace.size() > 1);
    for (std::size_t i = 1; i < m.loss_trace.size(); ++i) CHECK(m.loss_trace[i] <= m.loss_trace[i - 1]);
  }

  TEST_CASE("training input errors") {
    const std::vector<FeatureMap> x{{{"x", 1.0}}, {{"x", 2.0}}};
    CHECK_THROWS_AS(train(std::span<const FeatureMap>(x), std::vector<int>{1, 1}, {}), DataError);
    const std::vector<FeatureMap> bad{{{"x", 1.0}}, {{"weird", std::nan("")}}};
    try {
      train(std::span<const FeatureMap>(bad), std::vector<int>{0, 1}, {});
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("weird") != std::string::npos);
    }
  }

  TEST_CASE("prediction from fixed parameters") {
    TrainedModel m;
    CHECK(predict_proba(m, {{"anything", 5.0}}) == 0.5);
    CHECK(predict_class(0.5) == 0);
    m.intercept = std::log(3.0);
    CHECK(predict_proba(m, {}) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("model json round trip") {
    const std::vector<FeatureMap> x{{{"a", -1.0}, {"b", 2.0}}, {{"a", 1.0}}};
    const auto m = train(std::span<const FeatureMap>(x), std::vector<int>{0, 1}, {});
    const auto j = to_json(m);
    for (const char* key : {"feature_names", "means", "stds", "coefficients", "intercept", "lambda", "seed", "version"})
      CHECK(j.contains(key));
    CHECK(to_json(model_from_json(j)) == j);
    auto broken = j;
    broken["stds"][0] = 0.0;
    CHECK_THROWS(model_from_json(broken));
  }

  TEST_CASE("stratified folds") {
    std::vector<int> y(100, 0);
    std::fill(y.begin(), y.begin() + 30, 1);
    const auto folds = stratified_folds(y, 10, 42);
    for (int f = 0; f < 10; ++f) {
      int pos = 0, neg = 0;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (folds[i] == f) (y[i] ? pos : neg)++;
      CHECK(pos == 3);
      CHECK(neg == 7);
    }
    CHECK(stratified_folds(y, 10, 42) == folds);
    CHECK(stratified_folds(y, 10, 43) != folds);

    std::vector<int> y2(101, 0);
    std::fill(y2.begin(), y2.begin() + 31, 1);
    const auto f2 = stratified_folds(y2, 10, 1);
    std::vector<int> minority(10, 0);
    for (std::size_t i = 0; i < y2.size(); ++i)
      if (y2[i]) minority[f2[i]]++;
    CHECK(std::count(minority.begin(), minority.end(), 4) == 1);
    CHECK(std::count(minority.begin(), minority.end(), 3) == 9);

    CHECK_THROWS_AS(stratified_folds(std::vector<int>{0, 0, 1}, 2, 0), DataError);
    CHECK_THROWS_AS(stratified_folds(y, 1, 0), ConfigError);
  }

  TEST_CASE("metrics") {
    const std::vector<int> t{1, 1, 0, 0}, p{1, 0, 0, 0};
    const auto m = metrics(t, p);
    CHECK(m.accuracy == 0.75);
    CHECK(m.precision == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0).epsilon(1e-15));
    CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.f1 == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
    CHECK(m.f1 == doctest::Approx(0.73333).epsilon(1e-5));

    const auto perfect = metrics(t, t);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    const auto all_one = metrics(t, std::vector<int>{1, 1, 1, 1});
    CHECK(all_one.recall == 0.5);  // class 1 recall 1, class 0 recall 0
    CHECK_THROWS(metrics(std::vector<int>{}, std::vector<int>{}));
  }

  TEST_CASE("paired significance degenerate rules") {
    const auto a = report_with({0.5, 0.6, 0.7, 0.8, 0.9, 0.5, 0.6, 0.7, 0.8, 0.9});
    const auto same = paired_significance(a, a, "accuracy");
    CHECK(same.p_value == 1.0);
    CHECK_FALSE(same.significant);

    const std::vector<double> constant(10, 0.1);
    const auto c = paired_t_test(constant, "accuracy");
    CHECK(c.p_value == 0.0);
    CHECK(c.significant);

    auto b = report_with({0.5, 0.6});
    CHECK_THROWS_AS(paired_significance(a, b, "accuracy"), DataError);
  }

  TEST_CASE("paired t statistic and p value") {
    const std::vector<double> d{0.02, -0.01, 0.03, 0.00, 0.01, 0.02, -0.02, 0.01, 0.03, 0.01};
    // mean 0.01, squared deviations sum to 24e-4
    const double t_hand = 0.01 / (std::sqrt(24e-4 / 9.0) / std::sqrt(10.0));
    CHECK(oracle::paired_t(d) == doctest::Approx(t_hand).epsilon(1e-12));
    const auto r = paired_t_test(d, "f1");
    CHECK(r.t_statistic == doctest::Approx(t_hand).epsilon(1e-9));
    CHECK(r.t_statistic == doctest::Approx(1.9364916731037078).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(oracle::t_two_sided_p(t_hand, 9.0)).epsilon(1e-8));
    CHECK(r.significant == (r.p_value < 0.05));
    CHECK_FALSE(r.significant);
  }

  TEST_CASE("cv report round trip and csv") {
    auto r = report_with({0.5, 1.0});
    r.config = {{"seed", 3}};
    CHECK(to_json(cv_report_from_json(to_json(r))) == to_json(r));
    std::ostringstream out;
    write_cv_csv(out, r);
    CHECK(out.str().find("mean") != std::string::npos);
  }

  TEST_CASE("cross validation recovers a perfectly separating token") {
    SyntheticSpec spec;
    spec.contentious_rate = 1.0;
    spec.non_contentious_rate = 0.0;
    const auto ex = testing::synthetic_examples(spec);
    const auto run = cross_validate(ex, {}, testing::tfidf_config(1));
    CHECK(run.report.folds.size() == 10);
    CHECK(run.report.mean.accuracy >= 0.95);
    const auto again = cross_validate(ex, {}, testing::tfidf_config(1));
    CHECK(to_json(again.report).dump() == to_json(run.report).dump());
  }
}
