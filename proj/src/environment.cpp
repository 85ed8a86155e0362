#include "cover/environment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace cover {

Point3 Box::clamp(const Point3& p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y), std::clamp(p.z, min.z, max.z)};
}

Box Box::bounding(std::span<const Point3> points) {
  if (points.empty()) return {};
  Box b{points.front(), points.front()};
  for (const Point3& p : points) {
    b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y), std::min(b.min.z, p.z)};
    b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y), std::max(b.max.z, p.z)};
  }
  return b;
}

GridSpec GridSpec::covering(const Box& box, double resolution) {
  if (!(resolution > 0.0)) throw GeometryError("grid resolution must be positive");
  GridSpec g;
  g.origin = box.min;
  g.resolution = resolution;
  const Vec3 e = box.extent();
  const double ext[3] = {e.x, e.y, e.z};
  for (int a = 0; a < 3; ++a) {
    // Tolerate extents that are a whole number of voxels up to rounding.
    g.dims[a] = std::max(1, static_cast<int>(std::ceil(ext[a] / resolution - 1e-9)));
  }
  return g;
}

VoxelIndex GridSpec::voxel_of(const Point3& p) const {
  return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
          static_cast<int>(std::floor((p.y - origin.y) / resolution)),
          static_cast<int>(std::floor((p.z - origin.z) / resolution))};
}

// ---------------------------------------------------------------------------
// PointCloudIndex

std::size_t PointCloudIndex::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

PointCloudIndex::Key PointCloudIndex::cell_key(const Point3& p, double size) const {
  return {static_cast<std::int64_t>(std::floor(p.x / size)), static_cast<std::int64_t>(std::floor(p.y / size)),
          static_cast<std::int64_t>(std::floor(p.z / size))};
}

PointCloudIndex::PointCloudIndex(std::vector<Point3> points, const Box& bounds, double cell_size)
    : points_(std::move(points)), bounds_(bounds), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw GeometryError("cell size must be positive");
  for (const Point3& p : points_) {
    if (!is_finite(p)) throw GeometryError("non-finite obstacle point");
    if (!bounds_.contains(p, 1e-9)) throw GeometryError("obstacle point outside workspace bounds");
  }
  build();
}

PointCloudIndex::PointCloudIndex(std::vector<Point3> points, double cell_size)
    : PointCloudIndex(points, Box::bounding(points), cell_size) {}

void PointCloudIndex::build() {
  constexpr double kMerge = 1e-6;
  std::vector<Point3> kept;
  kept.reserve(points_.size());
  voxels_.clear();
  blocks_.clear();
  for (const Point3& p : points_) {
    const Key k = cell_key(p, cell_);
    bool duplicate = false;
    for (int dx = -1; dx <= 1 && !duplicate; ++dx) {
      for (int dy = -1; dy <= 1 && !duplicate; ++dy) {
        for (int dz = -1; dz <= 1 && !duplicate; ++dz) {
          auto it = voxels_.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == voxels_.end()) continue;
          for (std::uint32_t j : it->second) {
            if (squared_norm(kept[j] - p) <= kMerge * kMerge) {
              duplicate = true;
              break;
            }
          }
        }
      }
    }
    if (duplicate) continue;
    auto [it, fresh] = voxels_.try_emplace(k);
    it->second.push_back(static_cast<std::uint32_t>(kept.size()));
    if (fresh) {
      const Key b{static_cast<std::int64_t>(std::floor(static_cast<double>(k.x) / kBlock)),
                  static_cast<std::int64_t>(std::floor(static_cast<double>(k.y) / kBlock)),
                  static_cast<std::int64_t>(std::floor(static_cast<double>(k.z) / kBlock))};
      blocks_[b].push_back(k);
    }
    kept.push_back(p);
  }
  points_ = std::move(kept);
}

namespace {

double box_distance2(const Point3& c, const Point3& lo, const Point3& hi) {
  const double dx = std::max({lo.x - c.x, 0.0, c.x - hi.x});
  const double dy = std::max({lo.y - c.y, 0.0, c.y - hi.y});
  const double dz = std::max({lo.z - c.z, 0.0, c.z - hi.z});
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::size_t> PointCloudIndex::query_indices(const Point3& center, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty() || !(radius >= 0.0)) return out;
  const double r2 = radius * radius;
  const double block = cell_ * kBlock;
  const Key lo = cell_key(center - Vec3{radius, radius, radius}, block);
  const Key hi = cell_key(center + Vec3{radius, radius, radius}, block);
  for (std::int64_t bz = lo.z; bz <= hi.z; ++bz) {
    for (std::int64_t by = lo.y; by <= hi.y; ++by) {
      for (std::int64_t bx = lo.x; bx <= hi.x; ++bx) {
        const Point3 bmin{bx * block, by * block, bz * block};
        if (box_distance2(center, bmin, bmin + Vec3{block, block, block}) > r2) continue;
        auto bit = blocks_.find({bx, by, bz});
        if (bit == blocks_.end()) continue;
        for (const Key& k : bit->second) {
          const Point3 vmin{k.x * cell_, k.y * cell_, k.z * cell_};
          if (box_distance2(center, vmin, vmin + Vec3{cell_, cell_, cell_}) > r2) continue;
          for (std::uint32_t i : voxels_.at(k)) {
            if (squared_norm(points_[i] - center) <= r2) out.push_back(i);
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Point3> PointCloudIndex::query(const Point3& center, double radius) const {
  std::vector<Point3> out;
  for (std::size_t i : query_indices(center, radius)) out.push_back(points_[i]);
  return out;
}

double PointCloudIndex::nearest_distance(const Point3& p, double max_radius) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : query_indices(p, max_radius)) best = std::min(best, distance(points_[i], p));
  return best;
}

std::vector<Point3> sense(const PointCloudIndex& index, const SensorModel& sensor, const Point3& position) {
  return index.query(position, sensor.range);
}

// ---------------------------------------------------------------------------
// Point-cloud files

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "xyz") return CloudFormat::xyz;
  if (name == "ply" || name == "ply-ascii") return CloudFormat::ply_ascii;
  if (name == "pcd" || name == "pcd-ascii") return CloudFormat::pcd_ascii;
  throw ParseError("unknown point cloud format '" + std::string(name) + "'", 0);
}

std::string_view to_string(CloudFormat format) {
  switch (format) {
    case CloudFormat::xyz:
      return "xyz";
    case CloudFormat::ply_ascii:
      return "ply-ascii";
    case CloudFormat::pcd_ascii:
      return "pcd-ascii";
  }
  return "xyz";
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_number(std::string_view tok, std::size_t line_no) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    // from_chars rejects "nan"/"inf" spellings on some platforms; treat them
    // explicitly so pcd files with invalid points parse.
    if (tok == "nan" || tok == "NaN" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError("invalid number '" + std::string(tok) + "'", line_no);
  }
  return v;
}

bool is_blank_or_comment(std::string_view line) {
  const auto toks = split_ws(line);
  return toks.empty() || toks.front().front() == '#';
}

std::vector<Point3> read_xyz(std::istream& in) {
  std::vector<Point3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    const auto toks = split_ws(line);
    if (toks.size() < 3) {
      throw ParseError("expected 3 fields (x y z), found " + std::to_string(toks.size()), line_no);
    }
    Point3 p{parse_number(toks[0], line_no), parse_number(toks[1], line_no), parse_number(toks[2], line_no)};
    if (!is_finite(p)) throw ParseError("non-finite coordinate", line_no);
    pts.push_back(p);
  }
  return pts;
}

std::vector<Point3> read_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || split_ws(line).empty() || split_ws(line)[0] != "ply") throw ParseError("missing 'ply' magic", 1);

  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> props;
    bool has_list = false;
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (true) {
    if (!next()) throw ParseError("unterminated ply header", line_no);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "end_header") break;
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw ParseError("malformed format line", line_no);
      ascii = toks[1] == "ascii";
      if (!ascii) throw ParseError("only ascii ply is supported", line_no);
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError("malformed element line", line_no);
      Element e;
      e.name = std::string(toks[1]);
      const double n = parse_number(toks[2], line_no);
      if (n < 0 || n != std::floor(n)) throw ParseError("bad element count", line_no);
      e.count = static_cast<std::size_t>(n);
      elements.push_back(std::move(e));
    } else if (toks[0] == "property") {
      if (elements.empty() || toks.size() < 3) throw ParseError("property outside element", line_no);
      if (toks[1] == "list") {
        elements.back().has_list = true;
        elements.back().props.emplace_back(toks.back());
      } else {
        elements.back().props.emplace_back(toks[2]);
      }
    } else {
      throw ParseError("unexpected ply header line '" + line + "'", line_no);
    }
  }
  if (!ascii) throw ParseError("ply header lacks a format line", line_no);

  std::vector<Point3> pts;
  for (const Element& e : elements) {
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t k = 0; k < e.props.size(); ++k) {
      if (e.props[k] == "x") ix = static_cast<int>(k);
      if (e.props[k] == "y") iy = static_cast<int>(k);
      if (e.props[k] == "z") iz = static_cast<int>(k);
    }
    const bool is_vertex = e.name == "vertex";
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw ParseError("vertex element lacks x/y/z", line_no);
    for (std::size_t r = 0; r < e.count; ++r) {
      if (!next()) throw ParseError("unexpected end of ply body", line_no + 1);
      if (!is_vertex) continue;
      const auto toks = split_ws(line);
      if (e.has_list || toks.size() < e.props.size()) {
        if (toks.size() <= static_cast<std::size_t>(std::max({ix, iy, iz}))) {
          throw ParseError("too few vertex fields", line_no);
        }
      }
      Point3 p{parse_number(toks[ix], line_no), parse_number(toks[iy], line_no), parse_number(toks[iz], line_no)};
      if (!is_finite(p)) throw ParseError("non-finite coordinate", line_no);
      pts.push_back(p);
    }
  }
  return pts;
}

std::vector<Point3> read_pcd(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  std::vector<int> counts;
  std::size_t n_points = 0;
  bool have_points = false;
  while (true) {
    if (!std::getline(in, line)) throw ParseError("pcd header lacks DATA line", line_no);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank_or_comment(line)) continue;
    const auto toks = split_ws(line);
    const std::string_view key = toks[0];
    if (key == "FIELDS") {
      for (std::size_t k = 1; k < toks.size(); ++k) fields.emplace_back(toks[k]);
    } else if (key == "COUNT") {
      for (std::size_t k = 1; k < toks.size(); ++k) counts.push_back(static_cast<int>(parse_number(toks[k], line_no)));
    } else if (key == "POINTS") {
      if (toks.size() != 2) throw ParseError("malformed POINTS line", line_no);
      n_points = static_cast<std::size_t>(parse_number(toks[1], line_no));
      have_points = true;
    } else if (key == "DATA") {
      if (toks.size() != 2 || toks[1] != "ascii") throw ParseError("only DATA ascii is supported", line_no);
      break;
    } else if (key == "VERSION" || key == "SIZE" || key == "TYPE" || key == "WIDTH" || key == "HEIGHT" ||
               key == "VIEWPOINT") {
      continue;
    } else {
      throw ParseError("unexpected pcd header key '" + std::string(key) + "'", line_no);
    }
  }
  if (counts.empty()) counts.assign(fields.size(), 1);
  if (counts.size() != fields.size()) throw ParseError("COUNT does not match FIELDS", line_no);
  int ix = -1, iy = -1, iz = -1, column = 0, width = 0;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (fields[k] == "x") ix = column;
    if (fields[k] == "y") iy = column;
    if (fields[k] == "z") iz = column;
    column += counts[k];
  }
  width = column;
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("pcd FIELDS lacks x/y/z", line_no);

  std::vector<Point3> pts;
  std::size_t read = 0;
  while ((!have_points || read < n_points) && std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    const auto toks = split_ws(line);
    if (static_cast<int>(toks.size()) < width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(toks.size()), line_no);
    }
    ++read;
    Point3 p{parse_number(toks[ix], line_no), parse_number(toks[iy], line_no), parse_number(toks[iz], line_no)};
    if (!is_finite(p)) continue;  // invalid returns are stored as NaN in organized clouds
    pts.push_back(p);
  }
  if (have_points && read < n_points) throw ParseError("pcd body shorter than POINTS", line_no);
  return pts;
}

}  // namespace

std::vector<Point3> read_point_cloud(std::istream& in, CloudFormat format) {
  std::vector<Point3> pts;
  switch (format) {
    case CloudFormat::xyz:
      pts = read_xyz(in);
      break;
    case CloudFormat::ply_ascii:
      pts = read_ply(in);
      break;
    case CloudFormat::pcd_ascii:
      pts = read_pcd(in);
      break;
  }
  if (pts.empty()) throw ParseError("empty cloud", 0);
  return pts;
}

PointCloudIndex load_point_cloud(std::istream& in, CloudFormat format, double cell_size) {
  return PointCloudIndex(read_point_cloud(in, format), cell_size);
}

void write_xyz(std::ostream& out, std::span<const Point3> points) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  for (const Point3& p : points) buf << p.x << ' ' << p.y << ' ' << p.z << '\n';
  out << buf.str();
}

// ---------------------------------------------------------------------------
// KnownMap

KnownMap::UpdateResult KnownMap::update(std::span<const Point3> sensed) {
  UpdateResult result;
  for (const Point3& p : sensed) {
    VoxelIndex v = grid_.voxel_of(p);
    if (!grid_.in_bounds(v)) {
      ++result.clamped;
      v = {std::clamp(v.x, 0, grid_.dims[0] - 1), std::clamp(v.y, 0, grid_.dims[1] - 1),
           std::clamp(v.z, 0, grid_.dims[2] - 1)};
    }
    const std::size_t i = grid_.linear(v);
    if (known_[i]) continue;
    known_[i] = true;
    ++count_;
    list_.push_back(v);
    result.added.push_back(v);
  }
  return result;
}

KnownMap update_known_map(KnownMap map, std::span<const Point3> sensed) {
  map.update(sensed);
  return map;
}

// ---------------------------------------------------------------------------
// GmmDensity

GmmDensity::GmmDensity(std::vector<GmmComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw GeometryError("density needs at least one component");
  for (const auto& c : components_) {
    if (!(c.weight > 0.0) || !(c.sigma > 0.0) || !is_finite(c.center)) {
      throw GeometryError("density components need finite centers and positive weight and sigma");
    }
  }
}

double GmmDensity::operator()(const Point3& p) const {
  double v = 0.0;
  for (const auto& c : components_) v += c.weight * std::exp(-squared_norm(p - c.center) / (2.0 * c.sigma * c.sigma));
  return v;
}

double GmmDensity::upper_bound(const Box& box) const {
  double v = 0.0;
  for (const auto& c : components_) {
    v += c.weight * std::exp(-box_distance2(c.center, box.min, box.max) / (2.0 * c.sigma * c.sigma));
  }
  return v;
}

}  // namespace cover
