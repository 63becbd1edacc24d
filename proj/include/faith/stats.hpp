#pragma once

// Small descriptive statistics used by the simulation harness.

#include <algorithm>
#include <cmath>
#include <vector>

#include "faith/errors.hpp"

namespace faith::stats {

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  m.mean = mean(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

/// Jarque-Bera normality test. A constant sample is reported as
/// non-normal (p = 0).
struct NormalityTest {
  double statistic = 0.0;
  double p_value = 1.0;
};

inline NormalityTest jarque_bera(const std::vector<double>& x) {
  if (x.size() < 3) throw ConfigError("normality test needs at least three values");
  auto m = moments(x);
  NormalityTest t;
  if (m.variance <= 0.0) {
    t.statistic = INFINITY;
    t.p_value = 0.0;
    return t;
  }
  const double n = static_cast<double>(x.size());
  t.statistic = n / 6.0 * (m.skewness * m.skewness + m.excess_kurtosis * m.excess_kurtosis / 4.0);
  t.p_value = std::exp(-t.statistic / 2.0);  // chi-square, 2 degrees of freedom
  return t;
}

}  // namespace faith::stats
