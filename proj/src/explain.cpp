#include "contentious/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "contentious/errors.hpp"
#include "contentious/parallel.hpp"

namespace contentious {

using nlohmann::json;

namespace {

std::string group_of(const std::string& feature) {
  const auto slash = feature.find('/');
  return slash == std::string::npos ? std::string() : feature.substr(0, slash);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

json entry_json(const OddsRatioEntry& e) {
  return json{{"feature", e.feature}, {"group", e.group}, {"coefficient", e.coefficient}, {"odds_ratio", e.odds_ratio}};
}

}  // namespace

OddsRatioReport odds_ratios(const TrainedModel& m) {
  OddsRatioReport r;
  r.entries.reserve(m.feature_names.size());
  for (std::size_t j = 0; j < m.feature_names.size(); ++j)
    r.entries.push_back({m.feature_names[j], group_of(m.feature_names[j]), m.coefficients[j],
                         std::exp(m.coefficients[j])});
  return r;
}

TopBottom top_bottom(const OddsRatioReport& report, std::size_t k) {
  TopBottom tb;
  auto desc = report.entries;
  std::sort(desc.begin(), desc.end(), [](const OddsRatioEntry& a, const OddsRatioEntry& b) {
    if (a.odds_ratio != b.odds_ratio) return a.odds_ratio > b.odds_ratio;
    return a.feature < b.feature;
  });
  auto asc = report.entries;
  std::sort(asc.begin(), asc.end(), [](const OddsRatioEntry& a, const OddsRatioEntry& b) {
    if (a.odds_ratio != b.odds_ratio) return a.odds_ratio < b.odds_ratio;
    return a.feature < b.feature;
  });
  if (report.entries.size() < 2 * k) {
    tb.insufficient_features = true;
    tb.top = std::move(desc);
    tb.bottom = std::move(asc);
    return tb;
  }
  tb.top.assign(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(k));
  tb.bottom.assign(asc.begin(), asc.begin() + static_cast<std::ptrdiff_t>(k));
  return tb;
}

void write_odds_ratio_csv(std::ostream& out, const OddsRatioReport& report) {
  out.precision(17);
  out << "feature,group,coefficient,odds_ratio\n";
  for (const auto& e : report.entries)
    out << csv_field(e.feature) << ',' << csv_field(e.group) << ',' << e.coefficient << ',' << e.odds_ratio << '\n';
}

json to_json(const TopBottom& tb, std::size_t k) {
  json top = json::array(), bottom = json::array();
  for (const auto& e : tb.top) top.push_back(entry_json(e));
  for (const auto& e : tb.bottom) bottom.push_back(entry_json(e));
  return json{{"k", k},
              {"scale", "standardized"},
              {"top", top},
              {"bottom", bottom},
              {"insufficient_features", tb.insufficient_features}};
}

// ---------------------------------------------------------------------------

std::vector<double> default_fractions() {
  std::vector<double> f;
  for (int i = 1; i <= 10; ++i) f.push_back(i / 10.0);
  return f;
}

EarlyCurve early_curve(const CvRun& run, std::span<const Example> examples, const FeatureResources& resources,
                       const ExperimentConfig& config, const std::vector<double>& fractions) {
  if (run.fits.empty()) throw Error("early curve needs fitted folds");
  EarlyCurve curve;
  curve.fractions = fractions;
  curve.accuracy.resize(fractions.size());
  curve.f1.resize(fractions.size());
  parallel_for(fractions.size(), config.threads, [&](std::size_t i) {
    std::vector<Metrics> folds;
    for (const auto& fit : run.fits) folds.push_back(evaluate_fold(fit, examples, resources, config, fractions[i]));
    const auto mean = CvReport::average(folds);
    curve.accuracy[i] = mean.accuracy;
    curve.f1[i] = mean.f1;
  });
  return curve;
}

void write_early_curve_csv(std::ostream& out, const EarlyCurve& curve) {
  out << "fraction,accuracy,f1\n";
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    out.precision(6);
    out << curve.fractions[i] << ',';
    out.precision(17);
    out << curve.accuracy[i] << ',' << curve.f1[i] << '\n';
  }
}

// ---------------------------------------------------------------------------

double kolmogorov_q(double lambda) {
  const double a2 = -2.0 * lambda * lambda;
  double fac = 2.0, sum = 0.0, prev = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = fac * std::exp(a2 * j * j);
    sum += term;
    if (std::abs(term) <= 0.001 * prev || std::abs(term) <= 1e-8 * sum) return std::clamp(sum, 0.0, 1.0);
    fac = -fac;
    prev = std::abs(term);
  }
  return 1.0;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("KS test needs two non-empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  KsResult r;
  r.n_a = sa.size();
  r.n_b = sb.size();
  std::size_t i = 0, j = 0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j]))
      x = sa[i];
    else
      x = sb[j];
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    r.d = std::max(r.d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * r.d);
  return r;
}

SubredditKsReport subreddit_ks(std::span<const LabeledConversation> labeled) {
  std::map<std::string, std::array<double, 2>> counts;
  double totals[2] = {0, 0};
  for (const auto& lc : labeled) {
    const int c = static_cast<int>(lc.label);
    counts[lc.conversation.subreddit][c] += 1.0;
    totals[c] += 1.0;
  }
  if (totals[0] == 0 || totals[1] == 0) throw DataError("subreddit KS check needs both label classes");
  SubredditKsReport r;
  for (const auto& [sub, n] : counts) {
    r.subreddits.push_back(sub);
    r.contentious_share.push_back(n[1] / totals[1]);
    r.non_contentious_share.push_back(n[0] / totals[0]);
  }
  r.result = ks_two_sample(r.contentious_share, r.non_contentious_share);
  return r;
}

json to_json(const SubredditKsReport& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.subreddits.size(); ++i)
    rows.push_back({{"subreddit", r.subreddits[i]},
                    {"contentious_share", r.contentious_share[i]},
                    {"non_contentious_share", r.non_contentious_share[i]}});
  return json{{"construction",
               "per-subreddit share of each class's conversations; one sample per class, one point per subreddit"},
              {"d", r.result.d},
              {"p_value", r.result.p_value},
              {"n_a", r.result.n_a},
              {"n_b", r.result.n_b},
              {"subreddits", rows}};
}

}  // namespace contentious
