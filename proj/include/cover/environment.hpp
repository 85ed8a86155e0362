#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cover/geometry.hpp"

namespace cover {

/// Malformed point-cloud or scenario input. `line()` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Box {
  Point3 min;
  Point3 max;

  bool contains(const Point3& p, double tol = 0.0) const {
    return p.x >= min.x - tol && p.y >= min.y - tol && p.z >= min.z - tol && p.x <= max.x + tol &&
           p.y <= max.y + tol && p.z <= max.z + tol;
  }
  Vec3 extent() const { return max - min; }
  Point3 clamp(const Point3& p) const;
  static Box bounding(std::span<const Point3> points);

  friend bool operator==(const Box&, const Box&) = default;
};

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;

  friend auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

/// Regular voxel lattice: voxel (i,j,k) spans origin + [i,i+1) * resolution.
struct GridSpec {
  Point3 origin;
  double resolution = 0.25;
  std::array<int, 3> dims{1, 1, 1};

  /// Smallest lattice of `resolution` voxels covering `box` (at least one
  /// voxel per axis).
  static GridSpec covering(const Box& box, double resolution);

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  bool in_bounds(const VoxelIndex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims[0] && v.y < dims[1] && v.z < dims[2];
  }
  /// Voxel containing p (may be out of bounds).
  VoxelIndex voxel_of(const Point3& p) const;
  Point3 center(const VoxelIndex& v) const {
    return {origin.x + (v.x + 0.5) * resolution, origin.y + (v.y + 0.5) * resolution,
            origin.z + (v.z + 0.5) * resolution};
  }
  std::size_t linear(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v.z) * static_cast<std::size_t>(dims[1]) + static_cast<std::size_t>(v.y)) *
               static_cast<std::size_t>(dims[0]) +
           static_cast<std::size_t>(v.x);
  }
  VoxelIndex unlinear(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
  }
  Box bounds() const {
    return {origin, origin + Vec3{dims[0] * resolution, dims[1] * resolution, dims[2] * resolution}};
  }
  bool planar() const { return dims[2] == 1; }
};

/// Obstacle points with a voxel hash for range queries.
class PointCloudIndex {
 public:
  PointCloudIndex() = default;
  /// Points closer than 1e-6 m to an earlier point are dropped. Throws
  /// GeometryError if a point lies outside `bounds`.
  PointCloudIndex(std::vector<Point3> points, const Box& bounds, double cell_size = 0.25);
  /// Bounds taken as the bounding box of the points.
  explicit PointCloudIndex(std::vector<Point3> points, double cell_size = 0.25);

  const std::vector<Point3>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Box& bounds() const { return bounds_; }
  double cell_size() const { return cell_; }

  /// Indices of points with |q - center| <= radius, ascending.
  std::vector<std::size_t> query_indices(const Point3& center, double radius) const;
  std::vector<Point3> query(const Point3& center, double radius) const;

  /// Distance from p to the nearest indexed point within `max_radius`, or
  /// +infinity if none.
  double nearest_distance(const Point3& p, double max_radius) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  Key cell_key(const Point3& p, double size) const;
  void build();

  std::vector<Point3> points_;
  Box bounds_;
  double cell_ = 0.25;
  // Fine voxels hold point indices; coarse blocks (kBlock voxels per side)
  // hold the fine keys inside them to prune range queries.
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> voxels_;
  std::unordered_map<Key, std::vector<Key>, KeyHash> blocks_;
  static constexpr int kBlock = 16;
};

enum class CloudFormat { xyz, ply_ascii, pcd_ascii };

CloudFormat parse_cloud_format(std::string_view name);
std::string_view to_string(CloudFormat format);

/// Reads vertex positions only. Throws ParseError (with line number) on
/// malformed input and ParseError("empty cloud") when no point is read.
std::vector<Point3> read_point_cloud(std::istream& in, CloudFormat format);
PointCloudIndex load_point_cloud(std::istream& in, CloudFormat format, double cell_size = 0.25);
/// One "x y z" line per point at full double precision.
void write_xyz(std::ostream& out, std::span<const Point3> points);

struct SensorModel {
  double range = 15.0;
};

/// All indexed points within the sensor range of `position` (inclusive).
std::vector<Point3> sense(const PointCloudIndex& index, const SensorModel& sensor, const Point3& position);

/// Per-robot set of voxels known to hold obstacles. Monotone: voxels never
/// revert to unknown-free.
class KnownMap {
 public:
  struct UpdateResult {
    std::vector<VoxelIndex> added;  ///< voxels newly marked, in update order
    std::size_t clamped = 0;        ///< points outside the workspace, clamped in
  };

  KnownMap() = default;
  explicit KnownMap(const GridSpec& grid) : grid_(grid), known_(grid.size(), false) {}

  UpdateResult update(std::span<const Point3> sensed);
  bool is_obstacle(const VoxelIndex& v) const { return grid_.in_bounds(v) && known_[grid_.linear(v)]; }
  std::size_t obstacle_count() const { return count_; }
  const GridSpec& grid() const { return grid_; }
  const std::vector<VoxelIndex>& obstacles() const { return list_; }

 private:
  GridSpec grid_;
  std::vector<bool> known_;
  std::vector<VoxelIndex> list_;
  std::size_t count_ = 0;
};

/// Value-returning form of KnownMap::update.
KnownMap update_known_map(KnownMap map, std::span<const Point3> sensed);

struct GmmComponent {
  Point3 center;
  double weight = 1.0;
  double sigma = 5.0;

  friend bool operator==(const GmmComponent&, const GmmComponent&) = default;
};

/// Isotropic Gaussian mixture describing the targets of interest.
class GmmDensity {
 public:
  GmmDensity() = default;
  /// Throws GeometryError on an empty list, non-positive weight or sigma.
  explicit GmmDensity(std::vector<GmmComponent> components);

  double operator()(const Point3& p) const;
  /// Upper bound of the density over an axis-aligned box.
  double upper_bound(const Box& box) const;
  const std::vector<GmmComponent>& components() const { return components_; }

 private:
  std::vector<GmmComponent> components_;
};

inline double density_at(const GmmDensity& gmm, const Point3& p) { return gmm(p); }

}  // namespace cover
