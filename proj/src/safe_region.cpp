#include "cover/safe_region.hpp"

#include "cover/minqp.hpp"

namespace cover {

void BufferedCell::add(const CellFace& face) {
  faces_.push_back(face);
  region_.halfspaces.push_back(face.buffered());
}

CellFace neighbor_halfspace(const RobotDisk& self, const RobotDisk& other) {
  const Vec3 a = other.position - self.position;
  const double len = norm(a);
  if (len < 1e-9) throw GeometryError("robots coincide");
  CellFace face;
  face.plane = {a, dot(a, (self.position + other.position) * 0.5)};
  face.buffer = self.radius * len;
  face.source = FaceSource::neighbor;
  face.ref = other.id;
  face.generator = other.position;
  return face;
}

namespace {

CellFace obstacle_face(const RobotDisk& self, const Point3& q, int ref) {
  if (distance(q, self.position) < self.radius) throw ClearanceError("obstacle inside safety radius");
  const Separator sep = solve_min_norm({self.position, {q}});
  CellFace face;
  face.plane = {sep.a, sep.b};
  face.buffer = self.radius * norm(sep.a);
  face.source = FaceSource::obstacle;
  face.ref = ref;
  face.generator = q;
  return face;
}

}  // namespace

std::vector<CellFace> obstacle_halfspaces(const RobotDisk& self, std::span<const Point3> selected) {
  std::vector<CellFace> out;
  out.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) out.push_back(obstacle_face(self, selected[i], static_cast<int>(i)));
  return out;
}

BufferedCell build_bvc(const RobotDisk& self, std::span<const RobotDisk> neighbors,
                       std::span<const Point3> selected_obstacles) {
  BufferedCell cell;
  for (const RobotDisk& other : neighbors) {
    CellFace face = neighbor_halfspace(self, other);
    if (distance(self.position, other.position) < self.radius + other.radius - 1e-12) {
      throw ClearanceError("robots overlap");
    }
    cell.add(face);
  }
  for (const CellFace& face : obstacle_halfspaces(self, selected_obstacles)) cell.add(face);
  return cell;
}

std::size_t close_over_points(BufferedCell& cell, const RobotDisk& self, std::span<const Point3> points) {
  std::size_t added = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point3& q = points[i];
    bool separated = false;
    for (const CellFace& f : cell.faces()) {
      // q beyond the unbuffered plane keeps every cell point at least
      // `buffer / |a|` = r_self away from it.
      if (dot(f.plane.normal, q) - f.plane.offset >= -1e-12 * norm(f.plane.normal)) {
        separated = true;
        break;
      }
    }
    if (separated) continue;
    cell.add(obstacle_face(self, q, static_cast<int>(i)));
    ++added;
  }
  return added;
}

}  // namespace cover
