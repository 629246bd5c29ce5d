#include "bmloop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace bmloop::stats {

double kolmogorov_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // Jacobi-transformed series for the CDF; converges fast for small x.
    const double pi = std::numbers::pi;
    const double w = pi * pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * w);
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf(std::sqrt(n * m / (n + m)) * d);
  return r;
}

ChiSquareResult chi_square_uniform(std::span<const double> x, double lo, double hi, std::size_t bins) {
  if (x.empty()) throw std::invalid_argument("chi_square_uniform: empty sample");
  if (bins < 2 || !(hi > lo)) throw std::invalid_argument("chi_square_uniform: need bins >= 2 and hi > lo");
  std::vector<double> counts(bins, 0.0);
  for (const double v : x) {
    if (!(v >= lo && v < hi)) throw std::invalid_argument("chi_square_uniform: value outside [lo, hi)");
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)] += 1.0;
  }
  const double expected = static_cast<double>(x.size()) / static_cast<double>(bins);
  ChiSquareResult r;
  r.bins = bins;
  for (const double c : counts) r.statistic += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(bins - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

MeanSe mean_se(std::span<const double> x) {
  MeanSe r;
  r.n = x.size();
  if (x.empty()) return r;
  double sum = 0.0;
  for (const double v : x) sum += v;
  r.mean = sum / static_cast<double>(x.size());
  if (x.size() < 2) return r;
  double ss = 0.0;
  for (const double v : x) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return r;
}

}  // namespace bmloop::stats
