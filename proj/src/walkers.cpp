#include "bmloop/walkers.hpp"

#include <algorithm>
#include <string>

#include "bmloop/rng.hpp"

namespace bmloop {

void LatticeConfig::validate() const {
  if (!(mesh > 0.0 && mesh <= 0.1)) throw std::invalid_argument("LatticeConfig: mesh must lie in (0, 0.1]");
  validate_geometry();
}

void LatticeConfig::validate_geometry() const {
  if (!(mesh > 0.0 && mesh <= 1.0)) throw std::invalid_argument("LatticeConfig: mesh must lie in (0, 1]");
  if (static_cast<double>(max_steps) < 10.0 / (mesh * mesh))
    throw std::invalid_argument("LatticeConfig: max_steps must be at least 10 / mesh^2");
}

namespace {

std::vector<LatticePoint> walk_until_exit(const LatticeConfig& cfg, const MoveSource& moves) {
  static constexpr std::int32_t dx[4] = {1, 0, -1, 0};
  static constexpr std::int32_t dy[4] = {0, 1, 0, -1};

  std::vector<LatticePoint> walk;
  walk.reserve(static_cast<std::size_t>(std::min(0.6 / (cfg.mesh * cfg.mesh), 1e7)));
  LatticePoint p{};
  walk.push_back(p);
  for (std::uint64_t step = 0; step < cfg.max_steps; ++step) {
    const unsigned d = moves() & 3u;
    p.x += dx[d];
    p.y += dy[d];
    walk.push_back(p);
    // Same expression as the plane coordinates produced by to_plane.
    if (std::norm(Complex(cfg.mesh * p.x, cfg.mesh * p.y)) >= 1.0) return walk;
  }
  throw StepCapExceeded("sample_srw: walk did not exit the unit disk within " + std::to_string(cfg.max_steps) +
                        " steps (mesh " + std::to_string(cfg.mesh) + ")");
}

}  // namespace

std::vector<LatticePoint> sample_srw_lattice(const LatticeConfig& cfg, const MoveSource& moves) {
  cfg.validate_geometry();
  return walk_until_exit(cfg, moves);
}

std::vector<LatticePoint> sample_srw_lattice(const LatticeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  return walk_until_exit(cfg, [&rng] { return rng.direction4(); });
}

DiscretePath to_plane(std::span<const LatticePoint> walk, double mesh) {
  DiscretePath out;
  out.reserve(walk.size());
  for (const auto& p : walk) out.emplace_back(mesh * p.x, mesh * p.y);
  return out;
}

DiscretePath sample_srw(const LatticeConfig& cfg, std::uint64_t seed) {
  return to_plane(sample_srw_lattice(cfg, seed), cfg.mesh);
}

DiscretePath sample_srw(const LatticeConfig& cfg, const MoveSource& moves) {
  return to_plane(sample_srw_lattice(cfg, moves), cfg.mesh);
}

BasicErasureResult<LatticePoint> erase_lattice_loops(std::span<const LatticePoint> walk) {
  if (walk.empty()) throw std::invalid_argument("erase_lattice_loops: empty walk");
  std::int32_t x0 = walk[0].x, x1 = walk[0].x, y0 = walk[0].y, y1 = walk[0].y;
  for (const auto& p : walk) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const std::size_t width = static_cast<std::size_t>(x1 - x0) + 1;
  const std::size_t height = static_cast<std::size_t>(y1 - y0) + 1;
  auto slot = [&](const LatticePoint& p) {
    return static_cast<std::size_t>(p.y - y0) * width + static_cast<std::size_t>(p.x - x0);
  };
  std::vector<std::uint32_t> last(width * height, 0);
  for (std::size_t k = 0; k < walk.size(); ++k) last[slot(walk[k])] = static_cast<std::uint32_t>(k);

  BasicErasureResult<LatticePoint> out;
  const LatticePoint final_vertex = walk.back();
  std::size_t w = 0;
  out.simple_path.push_back(walk[0]);
  out.index_map.push_back(0);
  while (!(walk[w] == final_vertex)) {
    w = last[slot(walk[w])] + std::size_t{1};
    out.simple_path.push_back(walk[w]);
    out.index_map.push_back(w);
  }
  return out;
}

namespace {

LerwSample finish_lerw(const std::vector<LatticePoint>& walk, double mesh) {
  const auto erased = erase_lattice_loops(walk);
  LerwSample out;
  out.walk = to_plane(walk, mesh);
  out.erased.simple_path = to_plane(erased.simple_path, mesh);
  out.erased.index_map = erased.index_map;
  return out;
}

}  // namespace

LerwSample lerw_curve(const LatticeConfig& cfg, std::uint64_t seed) {
  return finish_lerw(sample_srw_lattice(cfg, seed), cfg.mesh);
}

LerwSample lerw_curve(const LatticeConfig& cfg, const MoveSource& moves) {
  return finish_lerw(sample_srw_lattice(cfg, moves), cfg.mesh);
}

}  // namespace bmloop
