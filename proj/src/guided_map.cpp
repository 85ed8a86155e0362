#include "cover/guided_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

namespace cover {

namespace {

constexpr std::array<NeighborStep, 26> make_3d_steps() {
  std::array<NeighborStep, 26> steps{};
  std::size_t k = 0;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int n = (dx != 0) + (dy != 0) + (dz != 0);
        if (n == 0) continue;
        const double len = n == 1 ? 1.0 : n == 2 ? 1.4142135623730951 : 1.7320508075688772;
        steps[k++] = {dx, dy, dz, len};
      }
    }
  }
  return steps;
}

constexpr std::array<NeighborStep, 8> make_2d_steps() {
  std::array<NeighborStep, 8> steps{};
  std::size_t k = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int n = (dx != 0) + (dy != 0);
      if (n == 0) continue;
      steps[k++] = {dx, dy, 0, n == 1 ? 1.0 : 1.4142135623730951};
    }
  }
  return steps;
}

constexpr auto kSteps3d = make_3d_steps();
constexpr auto kSteps2d = make_2d_steps();

}  // namespace

std::span<const NeighborStep> neighbor_steps(const GridSpec& grid) {
  if (grid.planar()) return kSteps2d;
  return kSteps3d;
}

// ---------------------------------------------------------------------------
// VoxelGrid

VoxelGrid VoxelGrid::from_known_map(const KnownMap& map, double inflation) {
  VoxelGrid grid(map.grid(), inflation);
  for (const VoxelIndex& v : map.obstacles()) grid.block_obstacle(v);
  return grid;
}

std::vector<VoxelIndex> VoxelGrid::block_obstacle(const VoxelIndex& obstacle) {
  std::vector<VoxelIndex> changed;
  const double res = spec_.resolution;
  const int reach = static_cast<int>(std::ceil((inflation_ + 0.5 * res) / res));
  const int reach_z = spec_.planar() ? 0 : reach;
  for (int dz = -reach_z; dz <= reach_z; ++dz) {
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        const VoxelIndex v{obstacle.x + dx, obstacle.y + dy, obstacle.z + dz};
        if (!spec_.in_bounds(v)) continue;
        // Distance from the center of v to the box of the obstacle voxel.
        auto gap = [res](int d) { return std::max(0.0, std::abs(d) * res - 0.5 * res); };
        const double gx = gap(dx), gy = gap(dy), gz = gap(dz);
        if (gx * gx + gy * gy + gz * gz > inflation_ * inflation_ + 1e-12) continue;
        std::uint8_t& cell = blocked_[spec_.linear(v)];
        if (!cell) {
          cell = 1;
          changed.push_back(v);
        }
      }
    }
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Goal selection

VoxelIndex select_goal_voxel(const GmmDensity& gmm, const Point3& position, const SensorModel& sensor,
                             const VoxelGrid& grid) {
  const GridSpec& g = grid.spec();
  const double range = sensor.range;
  const double r2 = range * range;
  VoxelIndex lo = g.voxel_of(position - Vec3{range, range, range});
  VoxelIndex hi = g.voxel_of(position + Vec3{range, range, range});
  lo = {std::max(lo.x, 0), std::max(lo.y, 0), std::max(lo.z, 0)};
  hi = {std::min(hi.x, g.dims[0] - 1), std::min(hi.y, g.dims[1] - 1), std::min(hi.z, g.dims[2] - 1)};
  if (lo.x > hi.x || lo.y > hi.y || lo.z > hi.z) throw Error("sensor region fully blocked");

  // Branch and bound over blocks of voxels: a block is scanned only while its
  // density bound can still match the best value found.
  constexpr int kBlock = 8;
  struct Block {
    VoxelIndex lo, hi;
    double bound;
  };
  std::vector<Block> blocks;
  for (int bz = lo.z; bz <= hi.z; bz += kBlock) {
    for (int by = lo.y; by <= hi.y; by += kBlock) {
      for (int bx = lo.x; bx <= hi.x; bx += kBlock) {
        Block b{{bx, by, bz},
                {std::min(bx + kBlock - 1, hi.x), std::min(by + kBlock - 1, hi.y), std::min(bz + kBlock - 1, hi.z)},
                0.0};
        const Box centers{g.center(b.lo), g.center(b.hi)};
        const Point3 nearest = centers.clamp(position);
        if (squared_norm(nearest - position) > r2) continue;
        b.bound = gmm.upper_bound(centers);
        blocks.push_back(b);
      }
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) { return a.bound > b.bound; });

  bool found = false;
  VoxelIndex best{};
  double best_density = -1.0;
  double best_dist2 = 0.0;
  for (const Block& b : blocks) {
    if (found && b.bound * (1.0 + 1e-12) < best_density) break;
    for (int z = b.lo.z; z <= b.hi.z; ++z) {
      for (int y = b.lo.y; y <= b.hi.y; ++y) {
        for (int x = b.lo.x; x <= b.hi.x; ++x) {
          const VoxelIndex v{x, y, z};
          const Point3 c = g.center(v);
          const double d2 = squared_norm(c - position);
          if (d2 > r2 || !grid.traversable(v)) continue;
          const double density = gmm(c);
          const bool better = !found || density > best_density ||
                              (density == best_density && (d2 < best_dist2 || (d2 == best_dist2 && v < best)));
          if (better) {
            found = true;
            best = v;
            best_density = density;
            best_dist2 = d2;
          }
        }
      }
    }
  }
  if (!found) throw Error("sensor region fully blocked");
  return best;
}

Point3 select_goal(const GmmDensity& gmm, const Point3& position, const SensorModel& sensor, const VoxelGrid& grid) {
  return grid.spec().center(select_goal_voxel(gmm, position, sensor, grid));
}

// ---------------------------------------------------------------------------
// Navigation function

NavField compute_nav_field(const VoxelGrid& grid, const VoxelIndex& goal) {
  const GridSpec& g = grid.spec();
  if (!g.in_bounds(goal)) throw Error("goal outside navigation grid");
  if (!grid.traversable(goal)) throw Error("goal voxel blocked");

  NavField nav;
  nav.grid = g;
  nav.goal = goal;
  nav.cost.assign(g.size(), NavField::kUnreachable);

  const auto steps = neighbor_steps(g);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t start = g.linear(goal);
  nav.cost[start] = 0.0;
  open.push({0.0, start});
  while (!open.empty()) {
    const auto [c, i] = open.top();
    open.pop();
    if (c > nav.cost[i]) continue;
    const VoxelIndex v = g.unlinear(i);
    for (const NeighborStep& s : steps) {
      const VoxelIndex w{v.x + s.dx, v.y + s.dy, v.z + s.dz};
      if (!g.in_bounds(w)) continue;
      const std::size_t j = g.linear(w);
      if (!grid.traversable(j)) continue;
      const double nc = c + s.length * g.resolution;
      if (nc < nav.cost[j]) {
        nav.cost[j] = nc;
        open.push({nc, j});
      }
    }
  }
  return nav;
}

NavField compute_nav_field(const VoxelGrid& grid, const Point3& goal) {
  return compute_nav_field(grid, grid.spec().voxel_of(goal));
}

double guidance_phi(const NavField& nav, double gamma, const Point3& p) {
  const VoxelIndex v = nav.grid.voxel_of(p);
  if (!nav.grid.in_bounds(v)) throw Error("point outside navigation grid");
  return guidance_phi(nav, gamma, v);
}

}  // namespace cover
