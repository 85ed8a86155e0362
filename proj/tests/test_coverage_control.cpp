#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cover/coverage_control.hpp"

using namespace cover;

namespace {

const VoxelWeight kUniform = [](const VoxelIndex&, const Point3&) { return 1.0; };

BufferedCell box_cell(const Point3& p, double half) {
  const RobotDisk self{0, p, 0.25};
  const double d = half + 0.25;
  const std::vector<Point3> q{p + Vec3{d, 0, 0}, p - Vec3{d, 0, 0}, p + Vec3{0, d, 0},
                              p - Vec3{0, d, 0}, p + Vec3{0, 0, d}, p - Vec3{0, 0, d}};
  return build_bvc(self, {}, q);
}

struct Brute {
  Point3 centroid;
  double cost = 0.0;
  double total = 0.0;
};

/// Plain sum over every voxel of the grid.
Brute brute(const BufferedCell& cell, const GridSpec& g, const VoxelWeight& w, const Point3& p, double range,
            const Point3& about) {
  Vec3 sum;
  Brute out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const VoxelIndex v = g.unlinear(i);
    const Point3 c = g.center(v);
    if (distance(c, p) > range) continue;
    bool in = true;
    for (const HalfSpace& h : cell.region().halfspaces) in = in && dot(h.normal, c) <= h.offset;
    if (!in) continue;
    const double wi = w(v, c);
    sum += c * wi;
    out.total += wi;
    out.cost += squared_norm(c - about) * wi * g.resolution * g.resolution * g.resolution;
  }
  out.centroid = sum / out.total;
  return out;
}

}  // namespace

TEST_CASE("symmetric box cell has its centroid at the center") {
  const GridSpec g{{0, 0, 0}, 0.25, {32, 32, 32}};
  const Point3 p{4, 4, 4};
  const BufferedCell cell = box_cell(p, 1.0);
  const CentroidResult r = weighted_centroid(cell, g, kUniform, p, SensorModel{15});
  CHECK(norm(r.centroid - p) < 1e-12);
  CHECK(r.voxels == 8 * 8 * 8);
  CHECK_FALSE(r.unweighted);
  CHECK_FALSE(r.empty);
}

TEST_CASE("two voxels weighted 1 and 3") {
  const GridSpec g{{-0.5, -0.5, -0.5}, 1.0, {2, 1, 1}};
  const VoxelWeight w = [](const VoxelIndex& v, const Point3&) { return v.x == 0 ? 1.0 : 3.0; };
  const CentroidResult r = weighted_centroid(BufferedCell{}, g, w, {0.5, 0, 0}, SensorModel{15});
  CHECK(r.centroid.x == doctest::Approx(0.75));
  CHECK(r.weight_total == doctest::Approx(4.0));
}

TEST_CASE("zero weights fall back to the plain centroid, no voxels to the position") {
  const GridSpec g{{0, 0, 0}, 0.25, {16, 16, 16}};
  const Point3 p{2, 2, 2};
  const BufferedCell cell = box_cell(p, 0.5);
  const CentroidResult z = weighted_centroid(cell, g, [](const VoxelIndex&, const Point3&) { return 0.0; }, p,
                                             SensorModel{15});
  CHECK(z.unweighted);
  CHECK(norm(z.centroid - p) < 1e-12);
  const CentroidResult e = weighted_centroid(cell, g, kUniform, {30, 30, 30}, SensorModel{1});
  CHECK(e.empty);
  CHECK(e.centroid == Point3{30, 30, 30});
}

TEST_CASE("random cells and weights match brute-force summation") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GridSpec g{{0, 0, 0}, 0.25, {24, 24, 24}};
  for (int trial = 0; trial < 40; ++trial) {
    const Point3 p{3 + u(rng), 3 + u(rng), 3 + u(rng)};
    const RobotDisk self{0, p, 0.25};
    std::vector<Point3> q;
    for (int k = 0; k < 6; ++k) {
      Vec3 d{u(rng), u(rng), u(rng)};
      d = d / std::max(norm(d), 1e-3);
      q.push_back(p + d * (1.0 + 1.5 * (1 + u(rng))));
    }
    const BufferedCell cell = build_bvc(self, {}, select_visible_obstacles(q, p, 15));
    const Point3 peak{3 + 3 * u(rng), 3 + 3 * u(rng), 3 + 3 * u(rng)};
    const VoxelWeight w = [&](const VoxelIndex&, const Point3& c) {
      return 0.05 + std::exp(-squared_norm(c - peak) / 2);
    };
    const double range = 1.5 + 2 * (1 + u(rng));
    const CentroidResult r = weighted_centroid(cell, g, w, p, SensorModel{range});
    const Brute b = brute(cell, g, w, p, range, p);
    CHECK(norm(r.centroid - b.centroid) <= 1e-9);
    CHECK(r.cost == doctest::Approx(b.cost).epsilon(1e-9));
    CHECK(r.cell_volume == 0.25 * 0.25 * 0.25);

    const Point3 q2{p.x + 0.1 * u(rng), p.y + 0.1 * u(rng), p.z + 0.1 * u(rng)};
    CHECK(r.cost_at(q2) == doctest::Approx(brute(cell, g, w, p, range, q2).cost).epsilon(1e-9));
    CHECK(r.cost_at(p) == doctest::Approx(r.cost).epsilon(1e-12));
  }
}

TEST_CASE("guidance centroid equals weighting by exp(-gamma M) directly") {
  const GridSpec g{{0, 0, 0}, 0.25, {40, 40, 1}};
  VoxelGrid grid(g);
  for (int y = 0; y < 30; ++y) grid.set_blocked({20, y, 0});
  const NavField nav = compute_nav_field(grid, VoxelIndex{35, 5, 0});
  const Point3 p{3, 3, 0.125};
  const BufferedCell cell = box_cell(p, 2.0);
  for (double gamma : {0.0, 0.5, 2.0}) {
    const CentroidResult r = weighted_centroid(cell, GuidanceDensity{&nav, gamma}, p, SensorModel{15});
    const VoxelWeight direct = [&](const VoxelIndex& v, const Point3&) { return guidance_phi(nav, gamma, v); };
    const CentroidResult d = weighted_centroid(cell, g, direct, p, SensorModel{15});
    CHECK(norm(r.centroid - d.centroid) <= 1e-9);
    CHECK(r.cost == doctest::Approx(d.cost).epsilon(1e-9));
    CHECK(r.weight_total == doctest::Approx(d.weight_total).epsilon(1e-9));
  }
  // Far from the goal the absolute weights underflow; the centroid does not.
  const CentroidResult sharp = weighted_centroid(cell, GuidanceDensity{&nav, 200.0}, p, SensorModel{15});
  CHECK_FALSE(sharp.unweighted);
  CHECK(sharp.centroid.x > p.x);
}

TEST_CASE("control law examples") {
  const ControlOutput a = control_law({0, 0, 0}, {3, 4, 0}, 2.5, 0.1);
  CHECK(a.velocity.x == doctest::Approx(1.5));
  CHECK(a.velocity.y == doctest::Approx(2.0));
  CHECK(a.velocity.z == 0.0);
  CHECK_FALSE(a.converged);

  const ControlOutput b = control_law({1, 1, 1}, {1, 1, 1}, 2.5, 0.1);
  CHECK(b.velocity == Vec3{});
  CHECK(b.converged);

  const ControlOutput c = control_law({0, 0, 0}, {0.1, 0, 0}, 2.5, 0.1);
  CHECK(c.velocity.x == doctest::Approx(1.0));
  CHECK(c.velocity.y == 0.0);

  CHECK(control_law({0, 0, 0}, {0.0005, 0, 0}, 2.5, 0.1).converged);
}

TEST_CASE("one step from the centroid law stays in a convex cell") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GridSpec g{{-8, -8, -8}, 0.25, {64, 64, 64}};
  for (int trial = 0; trial < 30; ++trial) {
    const Point3 p{u(rng), u(rng), u(rng)};
    std::vector<RobotDisk> others;
    for (int k = 0; k < 4; ++k) {
      Vec3 d{u(rng), u(rng), u(rng)};
      d = d / std::max(norm(d), 1e-3);
      others.push_back({k + 1, p + d * (0.6 + 2 * (1 + u(rng))), 0.25});
    }
    const RobotDisk self{0, p, 0.25};
    const BufferedCell cell = build_bvc(self, others, {});
    const CentroidResult r = weighted_centroid(cell, g, kUniform, p, SensorModel{4});
    const ControlOutput out = control_law(p, r.centroid, 2.5, 0.1);
    const Point3 next = p + out.velocity * 0.1;
    CHECK(cell.contains(next, 1e-9));
    CHECK(r.cost_at(next) <= r.cost + 1e-9);
  }
}
