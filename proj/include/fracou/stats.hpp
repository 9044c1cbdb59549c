#pragma once

// Monte Carlo summaries and small linear-algebra/statistics utilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracou {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

inline MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  out.mean = m;
  if (xs.size() > 1) {
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

struct VarSE {
  double var = 0.0;
  double se = 0.0;  // standard error of the variance estimate
  std::size_t n = 0;
};

// Sample variance with its (Gaussian-theory) standard error var*sqrt(2/(n-1)).
inline VarSE variance_se(std::span<const double> xs) {
  VarSE out;
  out.n = xs.size();
  if (xs.size() < 2) return out;
  const MeanSE m = mean_se(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  out.var = ss / static_cast<double>(xs.size() - 1);
  out.se = out.var * std::sqrt(2.0 / static_cast<double>(xs.size() - 1));
  return out;
}

inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("covariance needs two equal samples of size >= 2");
  }
  const double mx = mean_se(xs).mean;
  const double my = mean_se(ys).mean;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += (xs[i] - mx) * (ys[i] - my);
  return acc / static_cast<double>(xs.size() - 1);
}

// Least-squares slope of y against x.
inline double regression_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("regression needs two equal samples of size >= 2");
  }
  const double mx = mean_se(x).mean;
  const double my = mean_se(y).mean;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// Kolmogorov-Smirnov statistic of a sample against the N(0, sigma^2) law.
inline double ks_statistic_normal(std::vector<double> xs, double sigma) {
  if (xs.empty()) throw std::invalid_argument("empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-xs[i] / (sigma * std::sqrt(2.0)));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(cdf - lo), std::abs(cdf - hi)));
  }
  return d;
}

// Path-regularity estimator: log-log regression of the max increment over
// dyadic lags. The max is taken over a fixed set of anchor positions (stride
// = the largest lag), so the extreme-value count is the same for every lag
// and its log factor cancels out of the slope.
inline double holder_exponent_anchored(std::span<const double> path, int max_lag) {
  const int n = static_cast<int>(path.size()) - 1;
  if (max_lag < 2 || max_lag * 4 > n) throw std::invalid_argument("bad lag range");
  std::vector<double> logs_lag, logs_max;
  for (int lag = 1; lag <= max_lag; lag *= 2) {
    double m = 0.0;
    for (int a = 0; a + max_lag <= n; a += max_lag) {
      m = std::max(m, std::abs(path[a + lag] - path[a]));
    }
    if (m <= 0.0) return 0.0;
    logs_lag.push_back(std::log(static_cast<double>(lag)));
    logs_max.push_back(std::log(m));
  }
  return regression_slope(logs_lag, logs_max);
}

// In-place Cholesky of a dense SPD matrix (row-major n x n, lower factor).
// Returns false when a pivot fails.
inline bool cholesky_factor(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) a[i * n + j] = 0.0;
  }
  return true;
}

inline void cholesky_solve_inplace(const std::vector<double>& l, std::size_t n,
                                   std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

}  // namespace fracou
