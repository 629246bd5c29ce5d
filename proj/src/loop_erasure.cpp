#include "bmloop/loop_erasure.hpp"

#include <algorithm>
#include <cmath>

namespace bmloop {

ErasureResult erase_loops(const DiscretePath& path) {
  return erase_loops<Complex, ComplexBitsHash>(std::span<const Complex>(path));
}

Complex interpolate(const TimedPath& path, double t) {
  if (path.empty()) throw std::invalid_argument("interpolate: empty path");
  const auto& ts = path.times;
  if (t <= ts.front()) return path.points.front();
  if (t >= ts.back()) return path.points.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double a = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return path.points[lo] + a * (path.points[hi] - path.points[lo]);
}

namespace {

struct CellKey {
  std::int64_t ix;
  std::int64_t iy;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& c) const noexcept {
    return std::hash<std::int64_t>{}(c.ix * 73856093LL ^ c.iy * 19349663LL);
  }
};

CellKey cell_of(Complex z, double size) {
  return {static_cast<std::int64_t>(std::floor(z.real() / size)), static_cast<std::int64_t>(std::floor(z.imag() / size))};
}

}  // namespace

LoopErasureVerdict verify_loop_erasure(const TimedPath& x, const TimedPath& y, std::span<const double> w,
                                       double eps) {
  x.validate();
  y.validate();
  if (x.empty() || y.empty()) throw std::invalid_argument("verify_loop_erasure: empty curve");
  if (w.size() != y.size()) throw std::invalid_argument("verify_loop_erasure: w must be sampled on Y's grid");
  if (!(eps > 0.0)) throw std::invalid_argument("verify_loop_erasure: eps must be positive");
  for (std::size_t k = 1; k < w.size(); ++k)
    if (!(w[k] > w[k - 1])) throw std::invalid_argument("verify_loop_erasure: w is not increasing");
  if (w.front() != x.times.front()) throw std::invalid_argument("verify_loop_erasure: w(c) != a");
  if (std::abs(interpolate(x, w.back()) - x.back()) > eps)
    throw std::invalid_argument("verify_loop_erasure: |X(w(d)) - X(b)| > eps");

  const std::size_t ny = y.size();
  const double exempt = 3.0 * eps;

  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
  grid.reserve(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) grid[cell_of(x.points[s], eps)].push_back(s);

  LoopErasureVerdict verdict;
  std::size_t first_k = ny;  // smallest violating tip index so far

  auto record = [&](std::size_t k, std::size_t j, std::size_t s, double d, const char* why) {
    if (k < first_k || (k == first_k && verdict.ok)) {
      first_k = k;
      verdict.ok = false;
      verdict.tip_index = k;
      verdict.y_index = j;
      verdict.x_index = s;
      verdict.distance = d;
      verdict.reason = why;
    }
  };

  for (std::size_t k = 0; k < ny; ++k) {
    const double d = std::abs(y.points[k] - interpolate(x, w[k]));
    if (d > eps) {
      record(k, k, 0, d, "Y(T) is not X(w(T))");
      break;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> close;  // (s, K(s))
  for (std::size_t j = 0; j < ny && j < first_k; ++j) {
    const Complex yj = y.points[j];
    const CellKey c = cell_of(yj, eps);
    close.clear();
    std::size_t max_k = j;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = grid.find({c.ix + dx, c.iy + dy});
        if (it == grid.end()) continue;
        for (const std::size_t s : it->second) {
          const double ts = x.times[s];
          if (ts < w[j] || std::abs(yj - x.points[s]) >= eps) continue;
          // Largest tip index k with w[k] <= ts; k >= j since w[j] <= ts.
          const std::size_t kk = static_cast<std::size_t>(std::upper_bound(w.begin(), w.end(), ts) - w.begin()) - 1;
          close.emplace_back(s, kk);
          max_k = std::max(max_k, kk);
        }
      }
    }
    if (close.empty()) continue;
    // First tip index at or after j that has left the 3 eps ball around Y_j.
    std::size_t exit_k = ny;
    for (std::size_t k = j; k <= max_k && k < first_k; ++k) {
      if (std::abs(y.points[k] - yj) >= exempt) {
        exit_k = k;
        break;
      }
    }
    if (exit_k == ny) continue;
    for (const auto& [s, kk] : close) {
      if (exit_k <= kk) record(exit_k, j, s, std::abs(yj - x.points[s]), "prefix meets suffix away from the tip");
    }
  }
  return verdict;
}

EmbeddedErasure embed_erasure(const DiscretePath& path, const ErasureResult& er, std::size_t samples_per_edge) {
  if (samples_per_edge == 0) throw std::invalid_argument("embed_erasure: samples_per_edge must be positive");
  if (path.empty() || er.simple_path.empty()) throw std::invalid_argument("embed_erasure: empty input");
  const double m = static_cast<double>(samples_per_edge);
  EmbeddedErasure out;

  const std::size_t n = path.size() - 1;
  out.x.reserve(n * samples_per_edge + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < samples_per_edge; ++q) {
      const double a = static_cast<double>(q) / m;
      out.x.push_back(static_cast<double>(i) + a, path[i] + a * (path[i + 1] - path[i]));
    }
  }
  out.x.push_back(static_cast<double>(n), path[n]);

  const auto& y = er.simple_path;
  const auto& w = er.index_map;
  const std::size_t tau = y.size() - 1;
  for (std::size_t k = 0; k < tau; ++k) {
    // Y's edge k -> k+1 is X's edge last(Y_k) -> last(Y_k) + 1 = w(k+1).
    const double edge_start = static_cast<double>(w[k + 1] - 1);
    for (std::size_t q = 0; q < samples_per_edge; ++q) {
      const double a = static_cast<double>(q) / m;
      out.y.push_back(static_cast<double>(k) + a, y[k] + a * (y[k + 1] - y[k]));
      out.w.push_back(q == 0 ? static_cast<double>(w[k]) : edge_start + a);
    }
  }
  out.y.push_back(static_cast<double>(tau), y[tau]);
  out.w.push_back(static_cast<double>(w[tau]));
  return out;
}

}  // namespace bmloop
