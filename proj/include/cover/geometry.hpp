#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cover {

/// Base class for every error raised by the coverage kernel.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input violates a geometric precondition (coincident
/// points, points outside the mirror sphere, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

/// Positions in meters. Kept as an alias so that arithmetic between points
/// and displacement vectors needs no conversions.
using Point3 = Vec3;

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Closed half-space { p : normal . p <= offset }.
struct HalfSpace {
  Vec3 normal;
  double offset = 0.0;

  /// Signed violation in meters (positive means outside).
  double signed_distance(const Point3& p) const { return (dot(normal, p) - offset) / norm(normal); }
  bool contains(const Point3& p, double tol = 1e-9) const {
    return dot(normal, p) - offset <= tol * norm(normal);
  }
};

/// Intersection of half-spaces; an empty list is all of space.
struct ConvexRegion {
  std::vector<HalfSpace> halfspaces;

  bool contains(const Point3& p, double tol = 1e-9) const {
    for (const auto& h : halfspaces) {
      if (!h.contains(p, tol)) return false;
    }
    return true;
  }
};

struct HullResult {
  /// Indices into the input list, ascending.
  std::vector<std::size_t> vertex_indices;
  /// Affine dimension of the input: 3 for a proper hull, lower when the
  /// input was coplanar (2), collinear (1) or a single point (0).
  int dimension = 3;

  std::size_t vertex_count() const { return vertex_indices.size(); }
  bool degenerate() const { return dimension < 3; }
};

/// Spherical mirroring about `center`: q -> d * (2R/|d| - 1) with d = q - center.
/// Output is in the center-origin frame, same order as the input.
std::vector<Vec3> mirror_points(std::span<const Point3> points, const Point3& center, double radius);

/// Vertex set of the convex hull (QuickHull). Coincident points are merged at
/// 1e-6 m, keeping the lowest index. Coplanar or collinear inputs fall back to
/// a lower-dimensional hull and report it through `dimension`.
HullResult convex_hull(std::span<const Point3> points);

/// Hidden-point removal: the points whose mirrored images are vertices of the
/// hull of all images plus the viewpoint. Returned in input order.
std::vector<Point3> select_visible_obstacles(std::span<const Point3> local_points, const Point3& center,
                                             double radius);

/// Same selection, reported as input indices.
std::vector<std::size_t> select_visible_indices(std::span<const Point3> local_points, const Point3& center,
                                                double radius);

}  // namespace cover
