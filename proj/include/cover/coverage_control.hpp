#pragma once

#include <functional>

#include "cover/environment.hpp"
#include "cover/guided_map.hpp"
#include "cover/safe_region.hpp"

namespace cover {

/// Weight of a voxel in the centroid integral.
using VoxelWeight = std::function<double(const VoxelIndex&, const Point3& center)>;

struct CentroidResult {
  Point3 centroid;
  /// sum |c - p|^2 * w * resolution^3 over the integration voxels.
  double cost = 0.0;
  std::size_t voxels = 0;
  /// True when every weight was zero and the unweighted centroid was used.
  bool unweighted = false;
  /// True when no voxel center fell inside the cell; centroid = position.
  bool empty = false;
  double weight_total = 0.0;
  Point3 position;
  double cell_volume = 0.0;

  /// The same integral evaluated about another point q over the same voxels.
  double cost_at(const Point3& q) const {
    return cost + cell_volume * weight_total * (squared_norm(q - centroid) - squared_norm(position - centroid));
  }
};

/// Weighted centroid over the voxels of `grid` whose centers lie in the cell
/// and within sensor range of `position`.
CentroidResult weighted_centroid(const BufferedCell& cell, const GridSpec& grid, const VoxelWeight& weight,
                                 const Point3& position, const SensorModel& sensor);
CentroidResult weighted_centroid(const BufferedCell& cell, const GuidanceDensity& phi, const Point3& position,
                                 const SensorModel& sensor);

struct ControlOutput {
  Vec3 velocity;
  Point3 centroid;
  bool converged = false;
  double cell_cost = 0.0;
};

/// Move-to-centroid law with the speed clamped to min(u_max, |C - p| / dt) so
/// that one Euler step never overshoots the centroid.
ControlOutput control_law(const Point3& position, const Point3& centroid, double u_max, double dt,
                          double tol = 0.01);

}  // namespace cover
