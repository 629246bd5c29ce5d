#pragma once

// Chronological loop-erasure of finite paths, and an epsilon-tolerant checker
// for the loop-erasure relation between two sampled continuous curves.

#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bmloop/types.hpp"

namespace bmloop {

/// Vertices (X_0, ..., X_n) of a discrete path.
using DiscretePath = std::vector<Complex>;

struct ComplexBitsHash {
  std::size_t operator()(const Complex& z) const noexcept {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    const double re = z.real() + 0.0;  // folds -0.0 into +0.0
    const double im = z.imag() + 0.0;
    std::memcpy(&a, &re, sizeof a);
    std::memcpy(&b, &im, sizeof b);
    return std::hash<std::uint64_t>{}(a ^ (b * 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  }
};

template <class Vertex>
struct BasicErasureResult {
  std::vector<Vertex> simple_path;        // Y_0, ..., Y_tau
  std::vector<std::size_t> index_map;     // w(0) = 0 < w(1) < ... < w(tau)
};

using ErasureResult = BasicErasureResult<Complex>;

/// Loop-erasure by the last-visit rule: starting from w = 0, repeatedly set
/// w <- (last index k with X_k = X_w) + 1 until X_w equals the final vertex.
/// Runs in O(n) expected time. Repeated consecutive vertices are harmless:
/// the jump passes the whole run, so the output equals that of the collapsed
/// path while index_map still refers to positions in `path`.
template <class Vertex, class Hash = std::hash<Vertex>, class Eq = std::equal_to<Vertex>>
BasicErasureResult<Vertex> erase_loops(std::span<const Vertex> path) {
  if (path.empty()) throw std::invalid_argument("erase_loops: empty path");
  std::unordered_map<Vertex, std::size_t, Hash, Eq> last;
  last.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) last[path[k]] = k;

  BasicErasureResult<Vertex> out;
  const Eq eq{};
  const Vertex& final_vertex = path.back();
  std::size_t w = 0;
  out.simple_path.push_back(path[0]);
  out.index_map.push_back(0);
  while (!eq(path[w], final_vertex)) {
    w = last.find(path[w])->second + 1;
    out.simple_path.push_back(path[w]);
    out.index_map.push_back(w);
  }
  return out;
}

ErasureResult erase_loops(const DiscretePath& path);

/// Brute-force check of the prefix/suffix characterization: for every k the
/// prefix (Y_0..Y_k) meets the suffix (X_{w(k)}..X_n) only at Y_k, plus
/// w(0) = 0, Y_k = X_{w(k)}, X_{w(tau)} = X_n and w strictly increasing.
/// Returns an empty string on success, otherwise a description.
template <class Vertex, class Eq = std::equal_to<Vertex>>
std::string check_characterization(std::span<const Vertex> path, const BasicErasureResult<Vertex>& er) {
  const Eq eq{};
  const auto& y = er.simple_path;
  const auto& w = er.index_map;
  if (y.empty() || y.size() != w.size()) return "empty or mismatched erasure";
  if (w[0] != 0) return "w(0) != 0";
  if (!eq(path[w.back()], path.back())) return "X_{w(tau)} != X_n";
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (w[k] >= path.size()) return "w out of range";
    if (k > 0 && w[k] <= w[k - 1]) return "w not strictly increasing";
    if (!eq(y[k], path[w[k]])) return "Y_k != X_{w(k)} at k=" + std::to_string(k);
    for (std::size_t j = 0; j <= k; ++j) {
      for (std::size_t s = w[k]; s < path.size(); ++s) {
        if (eq(y[j], path[s]) && !eq(y[j], y[k]))
          return "prefix meets suffix away from Y_k at k=" + std::to_string(k) + ", j=" + std::to_string(j) +
                 ", s=" + std::to_string(s);
      }
      if (j < k && eq(y[j], y[k])) return "Y not simple at k=" + std::to_string(k);
    }
  }
  return {};
}

/// Result of verify_loop_erasure. When `ok` is false the first violation
/// (smallest Y sample index) is described.
struct LoopErasureVerdict {
  bool ok = true;
  std::size_t tip_index = 0;   // k: the sample time T = Y.times[k]
  std::size_t y_index = 0;     // j <= k: the prefix point Y(t_j)
  std::size_t x_index = 0;     // s: the suffix point X(s), s >= w(T)
  double distance = 0.0;       // |Y(t_j) - X(s)|
  std::string reason;
};

/// Checks that (Y, w) is a loop-erasure of X up to resolution eps: for every
/// sample time T of Y, every pair (Y(t), X(s)) with t <= T, s >= w(T) and
/// |Y(t) - X(s)| < eps satisfies |Y(t) - Y(T)| < 3 eps. Also requires
/// |Y(T) - X(w(T))| <= eps. `w[k]` is w at Y.times[k], in X's time domain.
/// Throws std::invalid_argument on mismatched grids, non-increasing w,
/// w(c) != a, |X(w(d)) - X(b)| > eps or eps <= 0.
LoopErasureVerdict verify_loop_erasure(const TimedPath& x, const TimedPath& y, std::span<const double> w,
                                       double eps);

/// X evaluated at time t by linear interpolation (clamped to the ends).
Complex interpolate(const TimedPath& path, double t);

/// Continuous embedding of a discrete path and its erasure: each edge is a
/// unit of time, sampled at `samples_per_edge` points by linear
/// interpolation. Returns X, Y and the induced w at Y's sample times.
struct EmbeddedErasure {
  TimedPath x;
  TimedPath y;
  std::vector<double> w;
};
EmbeddedErasure embed_erasure(const DiscretePath& path, const ErasureResult& er, std::size_t samples_per_edge);

}  // namespace bmloop
