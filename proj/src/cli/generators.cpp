#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cover/cli.hpp"

namespace cover::cli {

namespace {

/// Heights of the point layers: voxel-center heights of a `spacing` lattice
/// anchored at the workspace floor, at least one layer.
std::vector<double> layers(const Box& ws, double spacing) {
  const int n = std::max(1, static_cast<int>(std::floor(ws.extent().z / spacing + 1e-9)));
  std::vector<double> zs;
  for (int k = 0; k < n; ++k) zs.push_back(ws.min.z + (k + 0.5) * spacing);
  return zs;
}

void segment(std::vector<Point3>& out, double x0, double y0, double x1, double y1, const std::vector<double>& zs,
             double spacing) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    for (double z : zs) out.push_back({x0 + t * (x1 - x0), y0 + t * (y1 - y0), z});
  }
}

void ring(std::vector<Point3>& out, double cx, double cy, double radius, const std::vector<double>& zs,
          double spacing) {
  const int n = std::max(6, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    for (double z : zs) out.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a), z});
  }
}

std::vector<Point3> clipped(std::vector<Point3> pts, const Box& ws) {
  std::erase_if(pts, [&](const Point3& p) { return !ws.contains(p); });
  return pts;
}

}  // namespace

EnvKind parse_env_kind(std::string_view name) {
  if (name == "cluttered") return EnvKind::cluttered;
  if (name == "u-trap") return EnvKind::u_trap;
  if (name == "corridor") return EnvKind::corridor;
  if (name == "forest-like") return EnvKind::forest_like;
  throw ConfigError("unknown environment kind '" + std::string(name) + "'");
}

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::cluttered:
      return "cluttered";
    case EnvKind::u_trap:
      return "u-trap";
    case EnvKind::corridor:
      return "corridor";
    case EnvKind::forest_like:
      return "forest-like";
  }
  return "cluttered";
}

std::vector<Point3> u_wall(double x0, double x1, double y0, double bottom_y, const Box& workspace, double spacing) {
  const auto zs = layers(workspace, spacing);
  std::vector<Point3> pts;
  segment(pts, x0, bottom_y, x1, bottom_y, zs, spacing);
  segment(pts, x0, y0, x0, bottom_y, zs, spacing);
  segment(pts, x1, y0, x1, bottom_y, zs, spacing);
  return clipped(std::move(pts), workspace);
}

std::vector<Point3> generate_environment(const EnvSpec& spec) {
  if (!(spec.density > 0)) throw ConfigError("density must be positive");
  if (!(spec.spacing > 0)) throw ConfigError("spacing must be positive");
  const Box& ws = spec.workspace;
  const Vec3 e = ws.extent();
  if (!(e.x > 0 && e.y > 0 && e.z > 0)) throw ConfigError("workspace must have positive extent");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto zs = layers(ws, spec.spacing);
  const double cx = ws.min.x + 0.5 * e.x;
  const double cy = ws.min.y + 0.5 * e.y;
  const auto target = static_cast<std::size_t>(std::llround(spec.density * e.x * e.y * e.z));
  std::vector<Point3> pts;

  switch (spec.kind) {
    case EnvKind::cluttered: {
      // Vertical point columns scattered uniformly; the last one is cut short
      // so that the count matches density * volume.
      while (pts.size() < target) {
        const double x = ws.min.x + unit(rng) * e.x;
        const double y = ws.min.y + unit(rng) * e.y;
        for (double z : zs) {
          if (pts.size() == target) break;
          pts.push_back({x, y, z});
        }
      }
      return pts;
    }
    case EnvKind::u_trap: {
      const double w = 0.3 * e.x * (0.9 + 0.2 * unit(rng));
      const double d = 0.3 * e.y * (0.9 + 0.2 * unit(rng));
      return u_wall(cx - 0.5 * w, cx + 0.5 * w, cy - 0.5 * d, cy + 0.5 * d, ws, spec.spacing);
    }
    case EnvKind::corridor: {
      // A partition across the workspace whose only passage is a 1 m wide
      // corridor.
      const double half_len = 0.2 * e.x * (0.9 + 0.2 * unit(rng));
      const double half_w = 0.5;
      segment(pts, cx - half_len, cy - half_w, cx + half_len, cy - half_w, zs, spec.spacing);
      segment(pts, cx - half_len, cy + half_w, cx + half_len, cy + half_w, zs, spec.spacing);
      segment(pts, cx, cy + half_w + spec.spacing, cx, ws.max.y, zs, spec.spacing);
      segment(pts, cx, ws.min.y, cx, cy - half_w - spec.spacing, zs, spec.spacing);
      return clipped(std::move(pts), ws);
    }
    case EnvKind::forest_like: {
      while (pts.size() < target) {
        std::vector<Point3> trunk;
        ring(trunk, ws.min.x + unit(rng) * e.x, ws.min.y + unit(rng) * e.y, 0.3 + 0.3 * unit(rng), zs,
             spec.spacing);
        for (const Point3& p : clipped(std::move(trunk), ws)) {
          if (pts.size() == target) break;
          pts.push_back(p);
        }
      }
      return pts;
    }
  }
  return pts;
}

Family parse_family(std::string_view name) {
  if (name == "u-trap") return Family::u_trap;
  if (name == "cluttered") return Family::cluttered;
  throw ConfigError("unknown scenario family '" + std::string(name) + "'");
}

std::string_view to_string(Family family) { return family == Family::u_trap ? "u-trap" : "cluttered"; }

Scenario family_scenario(Family family, std::uint64_t seed, Policy policy) {
  Scenario s;
  s.seed = seed;
  s.policy = policy;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double layer = 0.125;
  // A sharp guidance density breaks the near-ties between detours to the
  // left and right of an obstacle.
  s.gamma = 10.0;

  if (family == Family::u_trap) {
    // Robots start inside the pocket; the only peak sits behind its bottom wall.
    s.workspace = {{0, 0, 0}, {30, 30, 0.25}};
    const double w = uniform(8.0, 11.0);
    const double depth = uniform(6.0, 8.0);
    const double cx = 15.0 + uniform(-1.0, 1.0);
    const double bottom = 19.0 + uniform(-0.5, 0.5);
    const double x0 = cx - 0.5 * w, x1 = cx + 0.5 * w, y0 = bottom - depth;
    s.obstacles = u_wall(x0, x1, y0, bottom, s.workspace);
    s.peaks = {{{cx + uniform(-1.0, 1.0), bottom + uniform(4.0, 6.0), layer}, 1.0, uniform(2.5, 3.5)}};
    s.robot_count = 1 + static_cast<int>(seed % 2);
    s.spawn = Box{{x0 + 1.0, y0 + 1.5, 0.0}, {x1 - 1.0, bottom - 1.0, 0.25}};
    s.t_max = 40.0;
    return s;
  }

  // Cluttered: pillars and cups between the start area and two peaks.
  s.workspace = {{0, 0, 0}, {40, 40, 0.25}};
  const std::vector<double> zs{layer};
  s.peaks = {{{uniform(30.0, 37.0), uniform(8.0, 16.0), layer}, 1.0, uniform(2.5, 4.0)},
             {{uniform(30.0, 37.0), uniform(24.0, 32.0), layer}, 1.0, uniform(2.5, 4.0)}};
  auto clear_of_peaks = [&](double x, double y, double r) {
    return std::all_of(s.peaks.begin(), s.peaks.end(),
                       [&](const GmmComponent& g) { return std::hypot(g.center.x - x, g.center.y - y) > r + 2.5; });
  };
  std::vector<Point3> pts;
  for (int k = 0; k < 3; ++k) {
    // Cup with its opening toward the start area.
    const double x = uniform(14.0, 26.0), y = uniform(6.0, 34.0);
    const double half = uniform(1.5, 2.5), depth = uniform(2.0, 3.0);
    if (!clear_of_peaks(x, y, depth + half)) continue;
    segment(pts, x, y - half, x, y + half, zs, 0.25);
    segment(pts, x - depth, y - half, x, y - half, zs, 0.25);
    segment(pts, x - depth, y + half, x, y + half, zs, 0.25);
  }
  for (int k = 0; k < 10; ++k) {
    const double x = uniform(12.0, 28.0), y = uniform(3.0, 37.0), r = uniform(0.5, 1.5);
    if (!clear_of_peaks(x, y, r)) continue;
    ring(pts, x, y, r, zs, 0.25);
  }
  s.obstacles = clipped(std::move(pts), s.workspace);
  s.robot_count = 2;
  s.spawn = Box{{2.0, 6.0, 0.0}, {8.0, 34.0, 0.25}};
  s.t_max = 60.0;
  return s;
}

}  // namespace cover::cli
