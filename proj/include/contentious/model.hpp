#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "contentious/feature_map.hpp"

namespace contentious {

inline constexpr int kModelVersion = 1;

/// Row-major sparse matrix over a fixed, sorted list of feature names.
struct DesignMatrix {
  struct Row {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
  };

  std::vector<std::string> feature_names;
  std::vector<Row> rows;

  /// Feature names are the sorted union over `xs`. Throws DataError on a
  /// non-finite value, naming the feature.
  static DesignMatrix from_features(std::span<const FeatureMap> xs);
  /// Projects onto a given name list; unknown features are dropped.
  static DesignMatrix project(std::span<const FeatureMap> xs, const std::vector<std::string>& feature_names);

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_features() const { return feature_names.size(); }
};

struct Standardization {
  std::vector<double> means;
  std::vector<double> stds;  // population std; 1 where the column is constant

  static Standardization fit(const DesignMatrix& x);
  static Standardization identity(std::size_t d);
};

struct TrainOptions {
  double l2 = -1.0;  // < 0 selects 1/n
  std::uint64_t seed = 0;
  int max_iterations = 5000;
  double gradient_tolerance = 1e-6;
  bool record_loss = false;
  bool standardize = true;  // false keeps means 0 and stds 1
};

struct TrainedModel {
  std::vector<std::string> feature_names;
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double l2_strength = 0.0;
  std::uint64_t seed = 0;
  int version = kModelVersion;

  // Diagnostics from training; not serialized.
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;

  /// β0 + Σ β_j (x_j - μ_j) / σ_j with absent features read as 0.
  double decision(const FeatureMap& x) const;
};

nlohmann::json to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& j);

/// Regularized mean logistic loss over a raw design matrix, standardized
/// implicitly. Parameters are laid out as [intercept, β_1..β_d].
class LogisticObjective {
 public:
  LogisticObjective(const DesignMatrix& x, std::span<const int> y, const Standardization& standardization,
                    double l2);

  double value(std::span<const double> params) const;
  /// Fills `grad` (resized to 1 + d) and returns the objective value.
  double value_and_gradient(std::span<const double> params, std::vector<double>& grad) const;
  std::size_t dimension() const { return 1 + x_.n_features(); }

 private:
  void margins(std::span<const double> params, std::vector<double>& z) const;

  const DesignMatrix& x_;
  std::vector<int> y_;
  const Standardization& st_;
  double l2_;
};

TrainedModel train(const DesignMatrix& x, std::span<const int> y, const TrainOptions& options);
TrainedModel train(std::span<const FeatureMap> x, std::span<const int> y, const TrainOptions& options);

double predict_proba(const TrainedModel& m, const FeatureMap& x);
/// 1 iff p > 0.5.
int predict_class(double probability);

/// Gradient of the regularized objective at the model's parameters, using
/// the model's standardization. Layout [intercept, β...].
std::vector<double> nll_gradient(const TrainedModel& m, std::span<const FeatureMap> x, std::span<const int> y);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Fold index per example. Each class is shuffled with its own pass of the
/// seeded generator and dealt round-robin; the dealing offset carries over
/// from one class to the next so fold sizes stay balanced.
std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double get(std::string_view metric) const;
};

/// Macro-averaged over classes 0 and 1.
Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred);

struct CvReport {
  std::vector<Metrics> folds;
  Metrics mean;
  std::vector<int> fold_assignment;
  nlohmann::json config = nlohmann::json::object();

  static Metrics average(const std::vector<Metrics>& folds);
};

nlohmann::json to_json(const CvReport& r);
CvReport cv_report_from_json(const nlohmann::json& j);
void write_cv_csv(std::ostream& out, const CvReport& r);

struct SignificanceResult {
  std::string metric;
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Two-sided paired t-test over per-fold differences (a - b).
SignificanceResult paired_significance(const CvReport& a, const CvReport& b, std::string_view metric);
SignificanceResult paired_t_test(std::span<const double> differences, std::string metric);

nlohmann::json to_json(const SignificanceResult& s);

}  // namespace contentious
