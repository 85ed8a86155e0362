#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cover/environment.hpp"

namespace cover {

/// Traversability lattice derived from a KnownMap. A voxel is blocked when
/// its center lies within the inflation radius of a known obstacle voxel's
/// box.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(const GridSpec& spec, double inflation = 0.25)
      : spec_(spec), inflation_(inflation), blocked_(spec.size(), 0) {}

  static VoxelGrid from_known_map(const KnownMap& map, double inflation);

  const GridSpec& spec() const { return spec_; }
  double inflation() const { return inflation_; }
  bool traversable(const VoxelIndex& v) const { return spec_.in_bounds(v) && !blocked_[spec_.linear(v)]; }
  bool traversable(std::size_t linear) const { return !blocked_[linear]; }

  /// Marks the inflated neighborhood of an obstacle voxel; returns the
  /// voxels that changed from traversable to blocked.
  std::vector<VoxelIndex> block_obstacle(const VoxelIndex& obstacle);
  /// Marks exactly one voxel (no inflation), for hand-built test grids.
  void set_blocked(const VoxelIndex& v, bool blocked = true) { blocked_[spec_.linear(v)] = blocked ? 1 : 0; }

 private:
  GridSpec spec_;
  double inflation_ = 0.25;
  std::vector<std::uint8_t> blocked_;
};

/// Cost-to-go (meters of shortest 26-connected path) to the goal voxel.
/// Unreachable voxels hold +infinity.
struct NavField {
  static constexpr double kUnreachable = std::numeric_limits<double>::infinity();

  GridSpec grid;
  std::vector<double> cost;
  VoxelIndex goal;

  double at(const VoxelIndex& v) const { return cost[grid.linear(v)]; }
};

/// Traversable voxel within sensor range maximizing the density; ties go to
/// the voxel nearer the position, then to the lexicographically smaller index.
/// Throws Error("sensor region fully blocked") when no such voxel exists.
VoxelIndex select_goal_voxel(const GmmDensity& gmm, const Point3& position, const SensorModel& sensor,
                             const VoxelGrid& grid);
Point3 select_goal(const GmmDensity& gmm, const Point3& position, const SensorModel& sensor, const VoxelGrid& grid);

/// One backward Dijkstra sweep from the goal over traversable voxels with
/// Euclidean edge lengths. Throws Error when the goal voxel is blocked or
/// outside the grid.
NavField compute_nav_field(const VoxelGrid& grid, const VoxelIndex& goal);
NavField compute_nav_field(const VoxelGrid& grid, const Point3& goal);

/// exp(-gamma * cost) at the voxel of p; 0 where unreachable. Throws Error
/// when p lies outside the grid.
double guidance_phi(const NavField& nav, double gamma, const Point3& p);
inline double guidance_phi(const NavField& nav, double gamma, const VoxelIndex& v) {
  const double c = nav.at(v);
  return c == NavField::kUnreachable ? 0.0 : std::exp(-gamma * c);
}

struct GuidanceDensity {
  const NavField* nav = nullptr;
  double gamma = 1.0;
};

/// Offsets of the 26 (3D) or 8 (planar) neighbors with their lengths in voxels.
struct NeighborStep {
  int dx, dy, dz;
  double length;
};
std::span<const NeighborStep> neighbor_steps(const GridSpec& grid);

}  // namespace cover
