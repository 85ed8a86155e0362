#include "cover/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace cover {

namespace {

constexpr double kMergeTolerance = 1e-6;

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Indices of the first occurrence of every point, merging points closer than
// kMergeTolerance. Ascending.
std::vector<std::size_t> unique_points(std::span<const Point3> points) {
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells;
  cells.reserve(points.size());
  std::vector<std::size_t> kept;
  kept.reserve(points.size());
  auto key_of = [](const Point3& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x / kMergeTolerance)),
                   static_cast<std::int64_t>(std::floor(p.y / kMergeTolerance)),
                   static_cast<std::int64_t>(std::floor(p.z / kMergeTolerance))};
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point3& p = points[i];
    if (!is_finite(p)) throw GeometryError("non-finite point in hull input");
    const CellKey k = key_of(p);
    bool duplicate = false;
    for (int dx = -1; dx <= 1 && !duplicate; ++dx) {
      for (int dy = -1; dy <= 1 && !duplicate; ++dy) {
        for (int dz = -1; dz <= 1 && !duplicate; ++dz) {
          auto it = cells.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells.end()) continue;
          for (std::size_t j : it->second) {
            if (squared_norm(points[j] - p) <= kMergeTolerance * kMergeTolerance) {
              duplicate = true;
              break;
            }
          }
        }
      }
    }
    if (duplicate) continue;
    cells[k].push_back(i);
    kept.push_back(i);
  }
  return kept;
}

// Planar hull by monotone chain. `pts` are 2D coordinates of the points
// `ids` (local ids); returns the hull vertex ids.
std::vector<int> planar_hull(const std::vector<std::array<double, 2>>& pts, double eps) {
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts[a][0] != pts[b][0]) return pts[a][0] < pts[b][0];
    if (pts[a][1] != pts[b][1]) return pts[a][1] < pts[b][1];
    return a < b;
  });
  auto turn = [&](int o, int a, int b) {
    const double ax = pts[a][0] - pts[o][0], ay = pts[a][1] - pts[o][1];
    const double bx = pts[b][0] - pts[o][0], by = pts[b][1] - pts[o][1];
    return ax * by - ay * bx;
  };
  auto span_len = [&](int o, int b) {
    return std::hypot(pts[b][0] - pts[o][0], pts[b][1] - pts[o][1]);
  };
  std::vector<int> hull;
  hull.reserve(2 * order.size());
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = hull.size();
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int p = pass == 0 ? order[k] : order[order.size() - 1 - k];
      while (hull.size() >= base + 2) {
        const int o = hull[hull.size() - 2];
        const int a = hull[hull.size() - 1];
        // Pop unless `a` is a strict left turn by more than eps (distance from
        // the chord o-p).
        if (turn(o, a, p) <= eps * span_len(o, p)) {
          hull.pop_back();
        } else {
          break;
        }
      }
      hull.push_back(p);
    }
    hull.pop_back();
  }
  std::sort(hull.begin(), hull.end());
  hull.erase(std::unique(hull.begin(), hull.end()), hull.end());
  return hull;
}

class QuickHull3 {
 public:
  QuickHull3(const std::vector<Point3>& pts, double eps) : pts_(pts), eps_(eps) {}

  // Builds the hull from an initial non-degenerate tetrahedron; returns the
  // local ids of hull vertices.
  std::vector<int> run(std::array<int, 4> simplex) {
    const auto [a, b, c, d] = simplex;
    add_oriented(a, b, c, d);
    add_oriented(a, b, d, c);
    add_oriented(a, c, d, b);
    add_oriented(b, c, d, a);

    std::vector<int> rest;
    rest.reserve(pts_.size());
    for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
      if (i != a && i != b && i != c && i != d) rest.push_back(i);
    }
    assign(rest, 0);

    std::vector<int> visible;
    std::vector<std::array<int, 2>> horizon;
    while (!pending_.empty()) {
      const int f = pending_.front();
      pending_.pop_front();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      add_point(f, visible, horizon);
    }

    std::vector<int> verts;
    for (const auto& face : faces_) {
      if (!face.alive) continue;
      verts.insert(verts.end(), face.v.begin(), face.v.end());
    }
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    return verts;
  }

 private:
  struct Face {
    std::array<int, 3> v;
    Vec3 n;
    double d = 0.0;
    std::vector<int> outside;
    bool alive = true;
    std::uint32_t stamp = 0;
    bool visible = false;
  };

  static std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  double dist(const Face& f, int p) const { return dot(f.n, pts_[p]) - f.d; }

  int make_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Vec3 n = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    const double len = norm(n);
    f.n = len > 0.0 ? n / len : Vec3{};
    // Offset from the centroid of the triangle balances rounding across the
    // three vertices.
    f.d = dot(f.n, (pts_[a] + pts_[b] + pts_[c]) / 3.0);
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(std::move(f));
    for (int k = 0; k < 3; ++k) {
      const int u = faces_[id].v[k];
      const int w = faces_[id].v[(k + 1) % 3];
      if (!edges_.emplace(edge_key(u, w), id).second) {
        throw GeometryError("convex hull topology error");
      }
    }
    return id;
  }

  void add_oriented(int a, int b, int c, int opposite) {
    Vec3 n = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    if (dot(n, pts_[opposite] - pts_[a]) > 0.0) std::swap(b, c);
    pending_.push_back(make_face(a, b, c));
  }

  void assign(const std::vector<int>& candidates, std::size_t first_face) {
    for (int p : candidates) {
      for (std::size_t f = first_face; f < faces_.size(); ++f) {
        if (faces_[f].alive && dist(faces_[f], p) > eps_) {
          faces_[f].outside.push_back(p);
          break;
        }
      }
    }
  }

  void add_point(int f, std::vector<int>& visible, std::vector<std::array<int, 2>>& horizon) {
    const Face& src = faces_[f];
    int eye = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int p : src.outside) {
      const double h = dist(src, p);
      if (h > best || (h == best && p < eye)) {
        best = h;
        eye = p;
      }
    }

    ++stamp_;
    visible.clear();
    horizon.clear();
    faces_[f].stamp = stamp_;
    faces_[f].visible = true;
    visible.push_back(f);
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const std::array<int, 3> v = faces_[visible[k]].v;
      for (int e = 0; e < 3; ++e) {
        const int a = v[e];
        const int b = v[(e + 1) % 3];
        auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end()) throw GeometryError("convex hull topology error");
        Face& nb = faces_[it->second];
        if (nb.stamp != stamp_) {
          nb.stamp = stamp_;
          nb.visible = dist(nb, eye) > eps_;
          if (nb.visible) {
            visible.push_back(it->second);
            continue;
          }
        }
        if (!nb.visible) horizon.push_back({a, b});
      }
    }

    std::vector<int> orphans;
    for (int g : visible) {
      Face& face = faces_[g];
      for (int p : face.outside) {
        if (p != eye) orphans.push_back(p);
      }
      face.outside.clear();
      face.outside.shrink_to_fit();
      face.alive = false;
      for (int k = 0; k < 3; ++k) edges_.erase(edge_key(face.v[k], face.v[(k + 1) % 3]));
    }

    const std::size_t first_new = faces_.size();
    for (const auto& [a, b] : horizon) make_face(a, b, eye);
    // Keep the lowest-index-first order inside each outside set.
    std::sort(orphans.begin(), orphans.end());
    assign(orphans, first_new);
    for (std::size_t g = first_new; g < faces_.size(); ++g) pending_.push_back(static_cast<int>(g));
  }

  const std::vector<Point3>& pts_;
  double eps_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  std::deque<int> pending_;
  std::uint32_t stamp_ = 0;
};

}  // namespace

std::vector<Vec3> mirror_points(std::span<const Point3> points, const Point3& center, double radius) {
  if (!(radius > 0.0)) throw GeometryError("mirror radius must be positive");
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Point3& q : points) {
    const Vec3 d = q - center;
    const double len = norm(d);
    if (len < 1e-9) throw GeometryError("degenerate mirror point");
    if (len > radius * (1.0 + 1e-9)) throw GeometryError("point outside mirror sphere");
    out.push_back(d * (2.0 * radius / len - 1.0));
  }
  return out;
}

HullResult convex_hull(std::span<const Point3> points) {
  HullResult result;
  if (points.empty()) {
    result.dimension = -1;
    return result;
  }
  const std::vector<std::size_t> ids = unique_points(points);
  std::vector<Point3> pts;
  pts.reserve(ids.size());
  double scale = 1.0;
  for (std::size_t i : ids) {
    pts.push_back(points[i]);
    scale = std::max({scale, std::abs(points[i].x), std::abs(points[i].y), std::abs(points[i].z)});
  }
  const double eps = 1e-10 * scale;
  const int n = static_cast<int>(pts.size());

  auto to_input = [&](const std::vector<int>& local) {
    std::vector<std::size_t> out;
    out.reserve(local.size());
    for (int l : local) out.push_back(ids[l]);
    std::sort(out.begin(), out.end());
    return out;
  };

  // Farthest pair among the axis extremes.
  std::array<int, 6> extremes{};
  for (int axis = 0; axis < 3; ++axis) {
    auto coord = [axis](const Point3& p) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; };
    int lo = 0, hi = 0;
    for (int i = 1; i < n; ++i) {
      if (coord(pts[i]) < coord(pts[lo])) lo = i;
      if (coord(pts[i]) > coord(pts[hi])) hi = i;
    }
    extremes[2 * axis] = lo;
    extremes[2 * axis + 1] = hi;
  }
  int i0 = 0, i1 = 0;
  double best = -1.0;
  for (int a = 0; a < 6; ++a) {
    for (int b = a + 1; b < 6; ++b) {
      const double d = squared_norm(pts[extremes[a]] - pts[extremes[b]]);
      if (d > best) {
        best = d;
        i0 = std::min(extremes[a], extremes[b]);
        i1 = std::max(extremes[a], extremes[b]);
      }
    }
  }
  if (std::sqrt(best) <= eps) {
    result.dimension = 0;
    result.vertex_indices = to_input({0});
    return result;
  }

  const Vec3 axis = (pts[i1] - pts[i0]) / norm(pts[i1] - pts[i0]);
  int i2 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = pts[i] - pts[i0];
    const double off = norm(d - axis * dot(d, axis));
    if (off > best) {
      best = off;
      i2 = i;
    }
  }
  if (i2 < 0) {
    int lo = 0, hi = 0;
    for (int i = 1; i < n; ++i) {
      const double t = dot(pts[i] - pts[i0], axis);
      if (t < dot(pts[lo] - pts[i0], axis)) lo = i;
      if (t > dot(pts[hi] - pts[i0], axis)) hi = i;
    }
    result.dimension = 1;
    result.vertex_indices = to_input({lo, hi});
    return result;
  }

  Vec3 normal = cross(pts[i1] - pts[i0], pts[i2] - pts[i0]);
  normal = normal / norm(normal);
  int i3 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double off = std::abs(dot(pts[i] - pts[i0], normal));
    if (off > best) {
      best = off;
      i3 = i;
    }
  }
  if (i3 < 0) {
    const Vec3 e2 = cross(normal, axis);
    std::vector<std::array<double, 2>> flat;
    flat.reserve(pts.size());
    for (const Point3& p : pts) {
      const Vec3 d = p - pts[i0];
      flat.push_back({dot(d, axis), dot(d, e2)});
    }
    result.dimension = 2;
    result.vertex_indices = to_input(planar_hull(flat, eps));
    return result;
  }

  QuickHull3 hull(pts, eps);
  result.dimension = 3;
  result.vertex_indices = to_input(hull.run({i0, i1, i2, i3}));
  return result;
}

std::vector<std::size_t> select_visible_indices(std::span<const Point3> local_points, const Point3& center,
                                                double radius) {
  if (local_points.empty()) return {};
  std::vector<Vec3> images = mirror_points(local_points, center, radius);
  images.push_back(Vec3{});  // the viewpoint, at the origin of the mirrored frame
  const HullResult hull = convex_hull(images);
  std::vector<std::size_t> selected;
  selected.reserve(hull.vertex_indices.size());
  for (std::size_t i : hull.vertex_indices) {
    if (i < local_points.size()) selected.push_back(i);
  }
  return selected;
}

std::vector<Point3> select_visible_obstacles(std::span<const Point3> local_points, const Point3& center,
                                             double radius) {
  std::vector<Point3> out;
  for (std::size_t i : select_visible_indices(local_points, center, radius)) out.push_back(local_points[i]);
  return out;
}

}  // namespace cover
