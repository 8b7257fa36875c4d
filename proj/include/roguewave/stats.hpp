#pragma once

// Hypothesis tests and interval estimates used by the samplers' self-checks
// and the rare-event studies.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "roguewave/errors.hpp"

namespace roguewave::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool passed(double level = 0.01) const { return p_value >= level; }
};

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF (Stephens' finite-n correction).
inline TestResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw ConfigError("ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

/// Pearson chi-square test of uniformity of values in [lo, hi) over `bins` equal cells.
inline TestResult chi2_uniform(std::span<const double> x, double lo, double hi, int bins = 32) {
  if (bins < 2 || x.empty()) throw ConfigError("chi2_uniform: need at least two bins and one value");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : x) {
    auto b = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double expected = static_cast<double>(x.size()) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(bins - 1);
  return {chi2, boost::math::cdf(boost::math::complement(dist, chi2))};
}

/// Sample Pearson correlation.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("correlation: need equal-length samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Two-sided test of zero correlation via the normal approximation r sqrt(n) ~ N(0, 1).
inline TestResult correlation_test(std::span<const double> a, std::span<const double> b) {
  const double r = correlation(a, b);
  const double z = std::abs(r) * std::sqrt(static_cast<double>(a.size()));
  return {r, 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), z))};
}

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval at confidence 1 - alpha.
inline Interval wilson(std::size_t hits, std::size_t n, double alpha = 0.05) {
  if (n == 0) throw ConfigError("wilson: no samples");
  const double z = boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / 2.0));
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
  return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

/// Exact two-sided binomial test (doubling the smaller tail).
inline TestResult binomial_test(std::size_t hits, std::size_t n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("binomial_test: p must lie in (0, 1)");
  boost::math::binomial dist(static_cast<double>(n), p);
  const double k = static_cast<double>(hits);
  const double lower = boost::math::cdf(dist, k);
  const double upper = hits == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, k - 1.0));
  return {k, std::min(1.0, 2.0 * std::min(lower, upper))};
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Slope in log-log coordinates.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_slope(lx, ly);
}

}  // namespace roguewave::stats
