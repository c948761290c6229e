#include "contentious/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "contentious/errors.hpp"
#include "contentious/random.hpp"

namespace contentious {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_labels(std::span<const int> y, std::size_t n) {
  if (y.size() != n) throw DataError("feature rows and labels differ in length");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    (v == 0 ? has0 : has1) = true;
  }
  if (!has0 || !has1) throw DataError("training labels contain a single class");
}

DesignMatrix build(std::span<const FeatureMap> xs, std::vector<std::string> names) {
  DesignMatrix m;
  m.feature_names = std::move(names);
  std::map<std::string_view, std::uint32_t> index;
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) index.emplace(m.feature_names[j], static_cast<std::uint32_t>(j));
  m.rows.reserve(xs.size());
  for (const auto& x : xs) {
    DesignMatrix::Row row;
    for (const auto& [name, value] : x) {
      if (!std::isfinite(value)) throw DataError("non-finite value for feature '" + name + "'");
      if (value == 0.0) continue;
      const auto it = index.find(name);
      if (it == index.end()) continue;
      row.index.push_back(it->second);
      row.value.push_back(value);
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

bool sorted_unique(const std::vector<std::string>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

}  // namespace

DesignMatrix DesignMatrix::from_features(std::span<const FeatureMap> xs) {
  std::set<std::string> names;
  for (const auto& x : xs)
    for (const auto& [name, value] : x) names.insert(name);
  return build(xs, std::vector<std::string>(names.begin(), names.end()));
}

DesignMatrix DesignMatrix::project(std::span<const FeatureMap> xs, const std::vector<std::string>& feature_names) {
  return build(xs, feature_names);
}

Standardization Standardization::fit(const DesignMatrix& x) {
  const std::size_t d = x.n_features();
  const double n = static_cast<double>(x.n_rows());
  Standardization st;
  st.means.assign(d, 0.0);
  st.stds.assign(d, 1.0);
  if (x.n_rows() == 0) return st;
  std::vector<double> nnz(d, 0.0);
  for (const auto& row : x.rows)
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      st.means[row.index[k]] += row.value[k];
      nnz[row.index[k]] += 1.0;
    }
  for (auto& m : st.means) m /= n;
  std::vector<double> ss(d, 0.0);
  for (const auto& row : x.rows)
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      const double dev = row.value[k] - st.means[row.index[k]];
      ss[row.index[k]] += dev * dev;
    }
  for (std::size_t j = 0; j < d; ++j) {
    ss[j] += (n - nnz[j]) * st.means[j] * st.means[j];  // implicit zeros
    const double sd = std::sqrt(ss[j] / n);
    st.stds[j] = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

Standardization Standardization::identity(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }

// ---------------------------------------------------------------------------

double TrainedModel::decision(const FeatureMap& x) const {
  double z = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j) z -= coefficients[j] * means[j] / stds[j];
  auto name = feature_names.begin();
  for (const auto& [key, value] : x) {
    name = std::lower_bound(name, feature_names.end(), key);
    if (name == feature_names.end()) break;
    if (*name != key) continue;
    const auto j = static_cast<std::size_t>(name - feature_names.begin());
    z += coefficients[j] * value / stds[j];
  }
  return z;
}

json to_json(const TrainedModel& m) {
  return json{{"feature_names", m.feature_names}, {"means", m.means},       {"stds", m.stds},
              {"coefficients", m.coefficients},   {"intercept", m.intercept}, {"lambda", m.l2_strength},
              {"seed", m.seed},                   {"version", m.version}};
}

TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  try {
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.stds = j.at("stds").get<std::vector<double>>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.l2_strength = j.at("lambda").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  if (m.version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(m.version));
  const auto d = m.feature_names.size();
  if (m.means.size() != d || m.stds.size() != d || m.coefficients.size() != d)
    throw FormatError("model file: parameter arrays differ in length");
  if (!sorted_unique(m.feature_names)) throw FormatError("model file: feature names must be sorted and unique");
  for (double s : m.stds)
    if (!(s > 0.0)) throw FormatError("model file: standard deviations must be positive");
  return m;
}

// ---------------------------------------------------------------------------

LogisticObjective::LogisticObjective(const DesignMatrix& x, std::span<const int> y,
                                     const Standardization& standardization, double l2)
    : x_(x), y_(y.begin(), y.end()), st_(standardization), l2_(l2) {
  if (y_.size() != x.n_rows()) throw DataError("feature rows and labels differ in length");
  if (x.n_rows() == 0) throw DataError("objective over an empty data set");
  if (st_.means.size() != x.n_features() || st_.stds.size() != x.n_features())
    throw Error("standardization does not match the design matrix");
}

void LogisticObjective::margins(std::span<const double> params, std::vector<double>& z) const {
  const std::size_t d = x_.n_features();
  double shift = params[0];
  for (std::size_t j = 0; j < d; ++j) shift -= params[1 + j] * st_.means[j] / st_.stds[j];
  z.assign(x_.n_rows(), shift);
  for (std::size_t i = 0; i < x_.n_rows(); ++i) {
    const auto& row = x_.rows[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      const auto j = row.index[k];
      acc += params[1 + j] * row.value[k] / st_.stds[j];
    }
    z[i] += acc;
  }
}

double LogisticObjective::value(std::span<const double> params) const {
  std::vector<double> z;
  margins(params, z);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += softplus(z[i]) - (y_[i] ? z[i] : 0.0);
  loss /= static_cast<double>(z.size());
  double reg = 0.0;
  for (std::size_t j = 1; j < params.size(); ++j) reg += params[j] * params[j];
  return loss + 0.5 * l2_ * reg;
}

double LogisticObjective::value_and_gradient(std::span<const double> params, std::vector<double>& grad) const {
  const std::size_t d = x_.n_features();
  const double n = static_cast<double>(x_.n_rows());
  std::vector<double> z;
  margins(params, z);
  grad.assign(1 + d, 0.0);
  double loss = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    loss += softplus(z[i]) - (y_[i] ? z[i] : 0.0);
    const double r = sigmoid(z[i]) - y_[i];
    r_sum += r;
    const auto& row = x_.rows[i];
    for (std::size_t k = 0; k < row.index.size(); ++k) grad[1 + row.index[k]] += r * row.value[k];
  }
  const double r_mean = r_sum / n;
  grad[0] = r_mean;
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double b = params[1 + j];
    grad[1 + j] = (grad[1 + j] / n - st_.means[j] * r_mean) / st_.stds[j] + l2_ * b;
    reg += b * b;
  }
  return loss / n + 0.5 * l2_ * reg;
}

TrainedModel train(const DesignMatrix& x, std::span<const int> y, const TrainOptions& options) {
  check_labels(y, x.n_rows());
  const double l2 = options.l2 < 0.0 ? 1.0 / static_cast<double>(x.n_rows()) : options.l2;
  if (!std::isfinite(l2)) throw ConfigError("l2 strength must be finite");
  if (options.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");

  const auto st = options.standardize ? Standardization::fit(x) : Standardization::identity(x.n_features());
  const LogisticObjective objective(x, y, st, l2);

  std::vector<double> w(objective.dimension(), 0.0), g, trial(w.size());
  double f = objective.value_and_gradient(w, g);

  TrainedModel m;
  if (options.record_loss) m.loss_trace.push_back(f);
  double step = 1.0;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double g_inf = 0.0, g_sq = 0.0;
    for (double v : g) {
      g_inf = std::max(g_inf, std::abs(v));
      g_sq += v * v;
    }
    if (g_inf < options.gradient_tolerance) {
      m.converged = true;
      break;
    }
    // Armijo backtracking; the step is allowed to grow again after success.
    double t = step;
    double f_trial = 0.0;
    bool accepted = false;
    while (t > 1e-20) {
      for (std::size_t k = 0; k < w.size(); ++k) trial[k] = w[k] - t * g[k];
      f_trial = objective.value(trial);
      if (f_trial <= f - 1e-4 * t * g_sq) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent possible at machine precision
    w.swap(trial);
    f = objective.value_and_gradient(w, g);
    if (options.record_loss) m.loss_trace.push_back(f);
    step = std::min(t * 2.0, 1e6);
  }

  m.feature_names = x.feature_names;
  m.means = st.means;
  m.stds = st.stds;
  m.intercept = w[0];
  m.coefficients.assign(w.begin() + 1, w.end());
  m.l2_strength = l2;
  m.seed = options.seed;
  m.iterations = iter;
  return m;
}

TrainedModel train(std::span<const FeatureMap> x, std::span<const int> y, const TrainOptions& options) {
  return train(DesignMatrix::from_features(x), y, options);
}

double predict_proba(const TrainedModel& m, const FeatureMap& x) { return sigmoid(m.decision(x)); }

int predict_class(double probability) { return probability > 0.5 ? 1 : 0; }

std::vector<double> nll_gradient(const TrainedModel& m, std::span<const FeatureMap> x, std::span<const int> y) {
  const auto design = DesignMatrix::project(x, m.feature_names);
  const Standardization st{m.means, m.stds};
  const LogisticObjective objective(design, y, st, m.l2_strength);
  std::vector<double> params{m.intercept};
  params.insert(params.end(), m.coefficients.begin(), m.coefficients.end());
  std::vector<double> g;
  objective.value_and_gradient(params, g);
  return g;
}

// ---------------------------------------------------------------------------

std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
    by_class[y[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < static_cast<std::size_t>(k))
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                      " examples, fewer than " + std::to_string(k) + " folds");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(y.size(), -1);
  std::size_t offset = 0;
  for (auto& members : by_class) {
    fisher_yates(members, rng);
    for (auto i : members) fold[i] = static_cast<int>(offset++ % static_cast<std::size_t>(k));
  }
  return fold;
}

double Metrics::get(std::string_view metric) const {
  if (metric == "accuracy") return accuracy;
  if (metric == "precision") return precision;
  if (metric == "recall") return recall;
  if (metric == "f1") return f1;
  throw ConfigError("unknown metric '" + std::string(metric) + "'");
}

Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw DataError("metrics: label vectors differ in length");
  if (y_true.empty()) throw DataError("metrics: empty input");
  double tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
  double correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t == p) {
      ++correct;
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  Metrics m;
  m.accuracy = correct / static_cast<double>(y_true.size());
  for (int c = 0; c < 2; ++c) {
    const double prec = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double rec = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    m.precision += prec / 2;
    m.recall += rec / 2;
    m.f1 += (prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0) / 2;
  }
  return m;
}

Metrics CvReport::average(const std::vector<Metrics>& folds) {
  Metrics m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.accuracy += f.accuracy;
    m.precision += f.precision;
    m.recall += f.recall;
    m.f1 += f.f1;
  }
  const double n = static_cast<double>(folds.size());
  m.accuracy /= n;
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

namespace {

json metrics_json(const Metrics& m) {
  return json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from(const json& j) {
  return Metrics{j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
                 j.at("f1").get<double>()};
}

}  // namespace

json to_json(const CvReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back(metrics_json(f));
  return json{{"folds", folds}, {"mean", metrics_json(r.mean)}, {"fold_assignment", r.fold_assignment},
              {"config", r.config}};
}

CvReport cv_report_from_json(const json& j) {
  CvReport r;
  try {
    for (const auto& f : j.at("folds")) r.folds.push_back(metrics_from(f));
    r.mean = metrics_from(j.at("mean"));
    r.fold_assignment = j.at("fold_assignment").get<std::vector<int>>();
    r.config = j.value("config", json::object());
  } catch (const json::exception& e) {
    throw FormatError(std::string("cv report: ") + e.what());
  }
  return r;
}

void write_cv_csv(std::ostream& out, const CvReport& r) {
  out.precision(17);
  out << "fold,accuracy,precision,recall,f1\n";
  auto row = [&](const std::string& name, const Metrics& m) {
    out << name << ',' << m.accuracy << ',' << m.precision << ',' << m.recall << ',' << m.f1 << '\n';
  };
  for (std::size_t i = 0; i < r.folds.size(); ++i) row(std::to_string(i), r.folds[i]);
  row("mean", r.mean);
}

SignificanceResult paired_t_test(std::span<const double> differences, std::string metric) {
  const std::size_t n = differences.size();
  if (n < 2) throw DataError("paired t-test needs at least 2 folds");
  SignificanceResult s;
  s.metric = std::move(metric);
  double mean = 0.0;
  for (double d : differences) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : differences) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  s.mean_difference = mean;
  const bool all_zero = std::all_of(differences.begin(), differences.end(), [](double d) { return d == 0.0; });
  // Exact equality, so rounding in the mean cannot fake a tiny variance.
  const bool constant = std::all_of(differences.begin(), differences.end(),
                                    [&](double d) { return d == differences[0]; });
  if (all_zero) {
    s.t_statistic = 0.0;
    s.p_value = 1.0;
  } else if (constant || sd == 0.0) {
    s.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), mean);
    s.p_value = 0.0;
  } else {
    s.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    s.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.t_statistic))), 0.0, 1.0);
  }
  s.significant = s.p_value < 0.05;
  return s;
}

SignificanceResult paired_significance(const CvReport& a, const CvReport& b, std::string_view metric) {
  if (a.folds.size() != b.folds.size() || a.fold_assignment != b.fold_assignment)
    throw DataError("paired test needs reports with the same fold assignment");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.folds.size(); ++i) diffs.push_back(a.folds[i].get(metric) - b.folds[i].get(metric));
  return paired_t_test(diffs, std::string(metric));
}

json to_json(const SignificanceResult& s) {
  json t = std::isfinite(s.t_statistic) ? json(s.t_statistic) : json(s.t_statistic > 0 ? "inf" : "-inf");
  return json{{"metric", s.metric},   {"mean_difference", s.mean_difference}, {"t_statistic", t},
              {"p_value", s.p_value}, {"significant", s.significant}};
}

}  // namespace contentious
