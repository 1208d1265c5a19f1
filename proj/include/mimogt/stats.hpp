#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mimogt {

/// Two-sided 99% standard normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

struct EstimateWithCI {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;

  [[nodiscard]] bool contains(double v) const { return ci_low <= v && v <= ci_high; }
  [[nodiscard]] double width() const { return ci_high - ci_low; }
};

/// Wilson score interval for a binomial proportion.
inline EstimateWithCI wilson_interval(std::size_t successes, std::size_t trials, double z = kZ99) {
  if (trials == 0) throw std::invalid_argument("Wilson interval needs at least one trial");
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  EstimateWithCI e;
  e.point = phat;
  e.trials = trials;
  e.successes = successes;
  e.ci_low = std::clamp(std::min(centre - half, phat), 0.0, 1.0);
  e.ci_high = std::clamp(std::max(centre + half, phat), 0.0, 1.0);
  return e;
}

inline bool intervals_overlap(const EstimateWithCI& a, const EstimateWithCI& b) {
  return a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
}

/// One-sample Kolmogorov-Smirnov statistic against Exp with the given mean.
/// Sorts `samples` in place.
inline double ks_statistic_exponential(std::vector<double>& samples, double mean) {
  if (samples.empty()) throw std::invalid_argument("KS statistic needs samples");
  if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-samples[i] / mean);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic KS critical value with Stephens' small-sample correction:
/// c(α) / (√n + 0.12 + 0.11/√n), c(α) = sqrt(-ln(α/2) / 2).
inline double ks_critical_value(std::size_t n, double alpha = 0.01) {
  if (n == 0) throw std::invalid_argument("KS critical value needs n > 0");
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double rn = std::sqrt(static_cast<double>(n));
  return c / (rn + 0.12 + 0.11 / rn);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

inline Moments sample_moments(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("need at least two samples");
  // Welford
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double v : x) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  return {mean, m2 / static_cast<double>(n - 1)};
}

}  // namespace mimogt
