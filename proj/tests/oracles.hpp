#pragma once

// Independent reference computations used as test oracles. None of these
// call into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "contentious/feature_map.hpp"
#include "contentious/model.hpp"

namespace contentious::oracle {

/// Dense regularized mean log-loss with explicit standardization.
/// params = [intercept, β...] over m.feature_names.
inline double logistic_loss(const std::vector<FeatureMap>& x, const std::vector<int>& y, const TrainedModel& m,
                            const std::vector<double>& params) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = params[0];
    for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
      const auto it = x[i].find(m.feature_names[j]);
      const double raw = it == x[i].end() ? 0.0 : it->second;
      z += params[j + 1] * (raw - m.means[j]) / m.stds[j];
    }
    total += std::log1p(std::exp(z)) - y[i] * z;
  }
  double reg = 0.0;
  for (std::size_t j = 1; j < params.size(); ++j) reg += params[j] * params[j];
  return total / double(x.size()) + 0.5 * m.l2_strength * reg;
}

/// Central differences of logistic_loss with step h.
inline std::vector<double> finite_difference_gradient(const std::vector<FeatureMap>& x, const std::vector<int>& y,
                                                      const TrainedModel& m, const std::vector<double>& params,
                                                      double h = 1e-5) {
  std::vector<double> g(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto up = params, down = params;
    up[j] += h;
    down[j] -= h;
    g[j] = (logistic_loss(x, y, m, up) - logistic_loss(x, y, m, down)) / (2 * h);
  }
  return g;
}

inline double rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-12 ? 0.0 : std::abs(a - b) / scale;
}

/// sup |F_a - F_b| evaluated at every merged sample point.
inline double ks_d(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  const auto cdf = [](const std::vector<double>& s, double v) {
    return double(std::count_if(s.begin(), s.end(), [&](double w) { return w <= v; })) / double(s.size());
  };
  double d = 0.0;
  for (double v : pts) d = std::max(d, std::abs(cdf(a, v) - cdf(b, v)));
  return d;
}

/// Two-sided p of Student's t by composite Simpson integration of the density.
inline double t_two_sided_p(double t, double nu) {
  const double c = std::tgamma((nu + 1) / 2) / (std::sqrt(nu * M_PI) * std::tgamma(nu / 2));
  const auto pdf = [&](double v) { return c * std::pow(1 + v * v / nu, -(nu + 1) / 2); };
  const int n = 200000;
  const double h = std::abs(t) / n;
  double s = pdf(0) + pdf(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 2.0 * (0.5 - s * h / 3.0);
}

/// t = mean / (sd / sqrt(n)) with the n - 1 sample variance.
inline double paired_t(const std::vector<double>& d) {
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= double(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return mean / (std::sqrt(ss / double(d.size() - 1)) / std::sqrt(double(d.size())));
}

}  // namespace contentious::oracle
