#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cover/geometry.hpp"

namespace cover {

/// A robot or obstacle sits closer than the safety clearance allows.
class ClearanceError : public Error {
 public:
  using Error::Error;
};

struct RobotDisk {
  int id = 0;
  Point3 position;
  double radius = 0.25;
};

enum class FaceSource { neighbor, obstacle };

/// One face of a buffered cell. `plane` is the unbuffered separator a.p <= b;
/// the cell keeps a.p <= b - buffer with buffer = r * |a|.
struct CellFace {
  HalfSpace plane;
  double buffer = 0.0;
  FaceSource source = FaceSource::neighbor;
  /// Neighbor robot id, or index into the obstacle list the face came from.
  int ref = -1;
  Point3 generator;  ///< the neighbor position or obstacle point

  HalfSpace buffered() const { return {plane.normal, plane.offset - buffer}; }
};

class BufferedCell {
 public:
  BufferedCell() = default;

  void add(const CellFace& face);
  const std::vector<CellFace>& faces() const { return faces_; }
  const ConvexRegion& region() const { return region_; }
  bool contains(const Point3& p, double tol = 1e-9) const { return region_.contains(p, tol); }
  std::size_t size() const { return faces_.size(); }

 private:
  std::vector<CellFace> faces_;
  ConvexRegion region_;
};

/// Bisector separating `self` from `other`, normal p_other - p_self, with
/// buffer r_self * |a|. Throws GeometryError("robots coincide").
CellFace neighbor_halfspace(const RobotDisk& self, const RobotDisk& other);

/// One tight minimum-norm separator per point, buffered by r_self * |a|.
/// Throws ClearanceError("obstacle inside safety radius").
std::vector<CellFace> obstacle_halfspaces(const RobotDisk& self, std::span<const Point3> selected);

/// Buffered Voronoi cell from neighbor positions and selected obstacle points.
/// Throws ClearanceError when robots overlap or an obstacle is inside the
/// safety radius, GeometryError when robots coincide.
BufferedCell build_bvc(const RobotDisk& self, std::span<const RobotDisk> neighbors,
                       std::span<const Point3> selected_obstacles);

inline bool contains(const BufferedCell& cell, const Point3& p) { return cell.contains(p); }

/// Adds a face for every point in `points` that no existing face keeps at
/// least r_self away from the cell. Returns how many faces were added.
std::size_t close_over_points(BufferedCell& cell, const RobotDisk& self, std::span<const Point3> points);

}  // namespace cover
