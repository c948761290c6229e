#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contentious/model.hpp"
#include "contentious/pipeline.hpp"

namespace contentious {

// Odds ratios are exp(β) on the standardized feature scale: the change in
// odds per one standard deviation of the feature.
struct OddsRatioEntry {
  std::string feature;
  std::string group;
  double coefficient = 0.0;
  double odds_ratio = 1.0;
};

struct OddsRatioReport {
  std::vector<OddsRatioEntry> entries;  // model feature order
};

OddsRatioReport odds_ratios(const TrainedModel& m);

struct TopBottom {
  std::vector<OddsRatioEntry> top;     // odds ratio descending
  std::vector<OddsRatioEntry> bottom;  // odds ratio ascending
  bool insufficient_features = false;  // fewer than 2k features; all returned
};

/// Ties are broken by feature name.
TopBottom top_bottom(const OddsRatioReport& report, std::size_t k);

void write_odds_ratio_csv(std::ostream& out, const OddsRatioReport& report);
nlohmann::json to_json(const TopBottom& tb, std::size_t k);

struct EarlyCurve {
  std::vector<double> fractions;
  std::vector<double> accuracy;
  std::vector<double> f1;
};

/// 0.1, 0.2, ..., 1.0 computed as i / 10.
std::vector<double> default_fractions();

/// Evaluates the fold models of `run` (trained on full conversations) on
/// prefix-truncated held-out conversations.
EarlyCurve early_curve(const CvRun& run, std::span<const Example> examples, const FeatureResources& resources,
                       const ExperimentConfig& config, const std::vector<double>& fractions = default_fractions());

void write_early_curve_csv(std::ostream& out, const EarlyCurve& curve);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov limiting distribution Q(λ) = 2 Σ (-1)^(j-1) exp(-2 j² λ²);
/// 1.0 when the series has not settled.
double kolmogorov_q(double lambda);

struct SubredditKsReport {
  std::vector<std::string> subreddits;
  std::vector<double> contentious_share;      // per subreddit, share of contentious conversations
  std::vector<double> non_contentious_share;  // per subreddit, share of non-contentious conversations
  KsResult result;
};

/// Compares the distribution of per-subreddit conversation shares between
/// the two label classes.
SubredditKsReport subreddit_ks(std::span<const LabeledConversation> labeled);

nlohmann::json to_json(const SubredditKsReport& r);

}  // namespace contentious
