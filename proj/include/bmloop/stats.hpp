#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bmloop::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution,
/// P(K > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_sf(double x);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// kolmogorov_sf(sqrt(n m / (n + m)) D). Throws on empty input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t bins = 0;
};

/// Pearson chi-square test of uniformity over [lo, hi) with equal bins.
ChiSquareResult chi_square_uniform(std::span<const double> x, double lo, double hi, std::size_t bins);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> x);

}  // namespace bmloop::stats
