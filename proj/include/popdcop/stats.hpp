#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace popdcop::stats {

inline constexpr double kZ99 = 2.576;

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample variance (n - 1 denominator); 0 for fewer than two values.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

struct ConfidenceInterval {
  double mean = 0;
  double lo = 0;
  double hi = 0;
  bool degenerate = false;  // n < 2
};

/// mean +/- 2.576 s / sqrt(n); zero width when n < 2 or the sample is constant.
inline ConfidenceInterval ci99(std::span<const double> xs) {
  const double m = mean(xs);
  if (xs.size() < 2) return {m, m, m, true};
  const double half = kZ99 * std::sqrt(variance(xs) / static_cast<double>(xs.size()));
  return {m, m - half, m + half, false};
}

struct WelchResult {
  double t = 0;
  double df = 0;
  double p = 1;  // two-sided
};

inline WelchResult welch_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("Welch test needs at least two values per sample");
  const double ma = mean(a), mb = mean(b);
  const double va = variance(a) / static_cast<double>(a.size());
  const double vb = variance(b) / static_cast<double>(b.size());
  if (va + vb == 0) return {0, 0, ma == mb ? 1.0 : 0.0};
  const double t = (ma - mb) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  boost::math::students_t dist(df);
  const double p = 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return {t, df, std::min(1.0, p)};
}

}  // namespace popdcop::stats
