#include "cover/coverage_control.hpp"

#include <algorithm>
#include <cmath>

namespace cover {

namespace {

/// Calls fn(voxel, center, squared distance) for every voxel whose center is
/// within sensor range of `position` and inside the cell.
template <class Fn>
void for_each_domain_voxel(const BufferedCell& cell, const GridSpec& grid, const Point3& position, double range,
                           Fn&& fn) {
  const double r2 = range * range;
  VoxelIndex lo = grid.voxel_of(position - Vec3{range, range, range});
  VoxelIndex hi = grid.voxel_of(position + Vec3{range, range, range});
  lo = {std::max(lo.x, 0), std::max(lo.y, 0), std::max(lo.z, 0)};
  hi = {std::min(hi.x, grid.dims[0] - 1), std::min(hi.y, grid.dims[1] - 1), std::min(hi.z, grid.dims[2] - 1)};

  const auto& planes = cell.region().halfspaces;
  for (int z = lo.z; z <= hi.z; ++z) {
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int x = lo.x; x <= hi.x; ++x) {
        const VoxelIndex v{x, y, z};
        const Point3 c = grid.center(v);
        const double d2 = squared_norm(c - position);
        if (d2 > r2) continue;
        // Strict membership keeps the discrete centroid inside the cell.
        bool inside = true;
        for (const HalfSpace& h : planes) {
          if (dot(h.normal, c) > h.offset) {
            inside = false;
            break;
          }
        }
        if (inside) fn(v, c, d2);
      }
    }
  }
}

/// Accumulates with weights w * scale; the reported cost and weight total are
/// multiplied back by `scale` (which may underflow to zero).
CentroidResult integrate(const BufferedCell& cell, const GridSpec& grid, const VoxelWeight& weight,
                         const Point3& position, double range, double scale) {
  Vec3 weighted_sum, plain_sum;
  double weight_sum = 0.0;
  double cost = 0.0;
  std::size_t count = 0;
  for_each_domain_voxel(cell, grid, position, range, [&](const VoxelIndex& v, const Point3& c, double d2) {
    const double w = weight(v, c);
    ++count;
    plain_sum += c;
    weighted_sum += c * w;
    weight_sum += w;
    cost += d2 * w;
  });

  CentroidResult out;
  out.voxels = count;
  const double cell_volume = grid.resolution * grid.resolution * grid.resolution;
  out.cost = cost * cell_volume * scale;
  out.position = position;
  out.cell_volume = cell_volume;
  if (count == 0) {
    out.centroid = position;
    out.empty = true;
  } else if (weight_sum > 0.0) {
    out.centroid = weighted_sum / weight_sum;
    out.weight_total = weight_sum * scale;
  } else {
    out.centroid = plain_sum / static_cast<double>(count);
    out.unweighted = true;
  }
  return out;
}

}  // namespace

CentroidResult weighted_centroid(const BufferedCell& cell, const GridSpec& grid, const VoxelWeight& weight,
                                 const Point3& position, const SensorModel& sensor) {
  return integrate(cell, grid, weight, position, sensor.range, 1.0);
}

CentroidResult weighted_centroid(const BufferedCell& cell, const GuidanceDensity& phi, const Point3& position,
                                 const SensorModel& sensor) {
  const NavField& nav = *phi.nav;
  const double gamma = phi.gamma;
  // exp(-gamma * M) underflows on long paths; weighting relative to the
  // smallest cost-to-go in the domain leaves the centroid unchanged.
  double m_min = NavField::kUnreachable;
  for_each_domain_voxel(cell, nav.grid, position, sensor.range,
                        [&](const VoxelIndex& v, const Point3&, double) { m_min = std::min(m_min, nav.at(v)); });
  if (!std::isfinite(m_min) || gamma == 0.0) m_min = 0.0;
  const double scale = std::exp(-gamma * m_min);
  return integrate(
      cell, nav.grid,
      [&](const VoxelIndex& v, const Point3&) {
        const double m = nav.at(v);
        return std::isfinite(m) ? std::exp(-gamma * (m - m_min)) : 0.0;
      },
      position, sensor.range, scale);
}

ControlOutput control_law(const Point3& position, const Point3& centroid, double u_max, double dt, double tol) {
  ControlOutput out;
  out.centroid = centroid;
  const Vec3 d = centroid - position;
  const double dist = norm(d);
  if (dist > 0.0) {
    const double speed = std::min(u_max, dist / dt);
    out.velocity = d * (speed / dist);
  }
  out.converged = norm(out.velocity) < tol;
  return out;
}

}  // namespace cover
