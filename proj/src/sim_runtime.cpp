#include "cover/sim_runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "cover/minqp.hpp"

namespace cover {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

Policy policy_variant(std::string_view name) {
  if (name == "proposed") return Policy::proposed;
  if (name == "greedy-density") return Policy::greedy_density;
  if (name == "pure-cvt") return Policy::pure_cvt;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::proposed:
      return "proposed";
    case Policy::greedy_density:
      return "greedy-density";
    case Policy::pure_cvt:
      return "pure-cvt";
  }
  return "proposed";
}

void Scenario::validate() const {
  const Vec3 e = workspace.extent();
  if (!(e.x > 0 && e.y > 0 && e.z > 0)) throw ConfigError("workspace must have positive extent");
  if (robot_count < 1) throw ConfigError("robot count must be at least 1");
  if (!initial_positions.empty() && static_cast<int>(initial_positions.size()) != robot_count) {
    throw ConfigError("number of initial positions does not match robot count");
  }
  if (!(robot_radius > 0)) throw ConfigError("robot radius must be positive");
  if (!(sensor_range > 0)) throw ConfigError("sensor range must be positive");
  if (!(resolution > 0)) throw ConfigError("grid resolution must be positive");
  if (!(u_max > 0)) throw ConfigError("u_max must be positive");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(t_max > 0)) throw ConfigError("t_max must be positive");
  if (!(converge_tol > 0)) throw ConfigError("converge tolerance must be positive");
  if (!(detect_radius > 0)) throw ConfigError("detect radius must be positive");
  if (deadlock_window < 1) throw ConfigError("deadlock window must be at least 1");
  if (!(gamma >= 0)) throw ConfigError("gamma must be nonnegative");
  if (peaks.empty()) throw ConfigError("density needs at least one peak");
  for (const auto& p : peaks) {
    if (!(p.weight > 0) || !(p.sigma > 0)) throw ConfigError("peak weight and sigma must be positive");
  }
  if (neighbor_cutoff && !(*neighbor_cutoff > 0)) throw ConfigError("neighbor cutoff must be positive");
}

World::World(const Scenario& s)
    : scenario(s),
      index([&] {
        s.validate();
        return PointCloudIndex(s.obstacles, s.workspace, s.resolution);
      }()),
      density(s.peaks),
      grid(GridSpec::covering(s.workspace, s.resolution)),
      sensor{s.sensor_range} {}

// ---------------------------------------------------------------------------

std::vector<RobotState> initial_states(const World& world) {
  const Scenario& s = world.scenario;
  std::vector<Point3> start = s.initial_positions;
  const double r = s.robot_radius;

  auto obstacle_gap = [&](const Point3& p) { return world.index.nearest_distance(p, 4.0 * r + 1.0); };

  if (start.empty()) {
    const Box region = s.spawn.value_or(world.grid.bounds());
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> ux(region.min.x, region.max.x);
    std::uniform_real_distribution<double> uy(region.min.y, region.max.y);
    std::uniform_real_distribution<double> uz(region.min.z, region.max.z);
    const double layer_z = world.grid.origin.z + 0.5 * world.grid.resolution;
    for (int i = 0; i < s.robot_count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 5000 && !placed; ++attempt) {
        Point3 p{ux(rng), uy(rng), world.grid.planar() ? layer_z : uz(rng)};
        if (!s.workspace.contains(p)) continue;
        if (obstacle_gap(p) < 2.0 * r) continue;
        bool clear = true;
        for (const Point3& q : start) clear = clear && distance(p, q) >= 4.0 * r;
        if (!clear) continue;
        start.push_back(p);
        placed = true;
      }
      if (!placed) throw ConfigError("could not sample a collision-free start configuration");
    }
  }

  for (std::size_t i = 0; i < start.size(); ++i) {
    if (!s.workspace.contains(start[i], 1e-9)) throw ConfigError("start position outside workspace");
    if (obstacle_gap(start[i]) < r) throw ConfigError("start position within robot radius of an obstacle");
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(start[i], start[j]) < 2.0 * r) throw ConfigError("start positions overlap");
    }
  }

  std::vector<RobotState> robots;
  robots.reserve(start.size());
  for (std::size_t i = 0; i < start.size(); ++i) {
    RobotState st;
    st.disk = {static_cast<int>(i), start[i], r};
    st.known = KnownMap(world.grid);
    st.traversable = VoxelGrid(world.grid, r);
    st.positions.push_back(start[i]);
    st.times.push_back(0.0);
    robots.push_back(std::move(st));
  }
  return robots;
}

StepReport step(const World& world, std::vector<RobotState>& robots, double t) {
  const Scenario& s = world.scenario;
  const double range = world.sensor.range;
  StepReport report;
  report.t = t;

  std::vector<RobotDisk> snapshot;
  snapshot.reserve(robots.size());
  for (const RobotState& r : robots) snapshot.push_back(r.disk);

  std::vector<Vec3> velocity(robots.size());
  for (std::size_t i = 0; i < robots.size(); ++i) {
    RobotState& robot = robots[i];
    const RobotDisk& self = snapshot[i];
    const Point3 p = self.position;
    RobotStep out;
    out.robot_id = self.id;
    out.position = p;

    // Local map: sensing, known map, traversability.
    auto map_start = Clock::now();
    const std::vector<Point3> sensed = sense(world.index, world.sensor, p);
    out.sensed = sensed.size();
    const auto update = robot.known.update(sensed);
    bool nav_dirty = false;
    for (const VoxelIndex& v : update.added) {
      for (const VoxelIndex& b : robot.traversable.block_obstacle(v)) {
        if (squared_norm(world.grid.center(b) - p) <= range * range) nav_dirty = true;
      }
    }
    double map_ms = elapsed_ms(map_start);

    // Safe region.
    auto cell_start = Clock::now();
    const std::vector<Point3> selected = select_visible_obstacles(sensed, p, range);
    std::vector<RobotDisk> neighbors;
    for (std::size_t j = 0; j < snapshot.size(); ++j) {
      if (j == i) continue;
      if (s.neighbor_cutoff && distance(snapshot[j].position, p) > *s.neighbor_cutoff) continue;
      neighbors.push_back(snapshot[j]);
    }
    BufferedCell cell = build_bvc(self, neighbors, selected);
    out.hidden_added = close_over_points(cell, self, sensed);
    out.cell_ms = elapsed_ms(cell_start);
    out.selected_obstacles = selected.size();
    out.cell_faces = cell.size();

    // Density for the centroid.
    CentroidResult centroid;
    switch (s.policy) {
      case Policy::proposed: {
        auto goal_start = Clock::now();
        std::optional<VoxelIndex> goal;
        try {
          goal = select_goal_voxel(world.density, p, world.sensor, robot.traversable);
        } catch (const Error&) {
          goal.reset();
        }
        if (goal) {
          out.goal_changed = !robot.nav || robot.nav->goal != *goal;
          if (out.goal_changed || nav_dirty) {
            robot.nav = compute_nav_field(robot.traversable, *goal);
            out.nav_recomputed = true;
          }
        } else {
          robot.nav.reset();
        }
        map_ms += elapsed_ms(goal_start);
        if (robot.nav) {
          centroid = weighted_centroid(cell, GuidanceDensity{&*robot.nav, s.gamma}, p, world.sensor);
        } else {
          centroid = weighted_centroid(
              cell, world.grid, [](const VoxelIndex&, const Point3&) { return 0.0; }, p, world.sensor);
        }
        break;
      }
      case Policy::greedy_density:
        centroid = weighted_centroid(
            cell, world.grid, [&](const VoxelIndex&, const Point3& c) { return world.density(c); }, p, world.sensor);
        break;
      case Policy::pure_cvt:
        centroid = weighted_centroid(
            cell, world.grid, [](const VoxelIndex&, const Point3&) { return 1.0; }, p, world.sensor);
        break;
    }
    out.map_ms = map_ms;

    const ControlOutput ctrl = control_law(p, centroid.centroid, s.u_max, s.dt, s.converge_tol);
    velocity[i] = ctrl.velocity;
    robot.converged = ctrl.converged;
    out.velocity = ctrl.velocity;
    out.centroid = centroid.centroid;
    out.cost = centroid.cost;
    const Point3 next = p + ctrl.velocity * s.dt;
    out.cost_after = centroid.cost_at(next);
    out.step_inside_cell = cell.contains(next, 1e-7);
    report.robots.push_back(out);
  }

  for (std::size_t i = 0; i < robots.size(); ++i) {
    robots[i].disk.position = snapshot[i].position + velocity[i] * s.dt;
    robots[i].positions.push_back(robots[i].disk.position);
    robots[i].times.push_back(t + s.dt);
  }
  return report;
}

bool detect_deadlock(const RobotState& state, const DeadlockParams& params) {
  if (state.converged) return false;
  const std::size_t window = static_cast<std::size_t>(std::max(params.window, 1));
  if (state.positions.size() < window + 1) return false;
  const Point3& now = state.positions.back();
  for (const Point3& peak : params.peaks) {
    if (distance(peak, now) <= params.detect_radius) return false;
  }
  const double limit = 0.5 * params.resolution;
  for (std::size_t k = state.positions.size() - 1 - window; k < state.positions.size(); ++k) {
    if (distance(state.positions[k], now) >= limit) return false;
  }
  return true;
}

bool TrialMetrics::any_deadlock() const {
  return std::any_of(deadlocked.begin(), deadlocked.end(), [](bool d) { return d; });
}

TrialResult run_trial(const Scenario& scenario, const TrialOptions& options) {
  const auto wall_start = Clock::now();
  const World world(scenario);
  const Scenario& s = world.scenario;
  TrialResult result;
  TrialMetrics& m = result.metrics;
  m.seed = s.seed;
  m.policy = s.policy;
  m.peaks_total = s.peaks.size();
  m.min_robot_robot = std::numeric_limits<double>::infinity();
  m.min_robot_obstacle = std::numeric_limits<double>::infinity();

  std::vector<RobotState> robots = initial_states(world);
  m.deadlocked.assign(robots.size(), false);
  std::vector<bool> detected(s.peaks.size(), false);

  DeadlockParams dl{s.deadlock_window, s.resolution, s.detect_radius, {}};
  for (const auto& pk : s.peaks) dl.peaks.push_back(pk.center);

  // Surface distances and peak detection at the current configuration.
  auto monitor = [&]() {
    for (std::size_t i = 0; i < robots.size(); ++i) {
      const RobotDisk& a = robots[i].disk;
      for (std::size_t j = i + 1; j < robots.size(); ++j) {
        const RobotDisk& b = robots[j].disk;
        m.min_robot_robot = std::min(m.min_robot_robot, distance(a.position, b.position) - a.radius - b.radius);
      }
      double gap = world.index.nearest_distance(a.position, 2.0);
      if (std::isinf(gap)) gap = world.index.nearest_distance(a.position, s.sensor_range);
      if (std::isinf(gap)) gap = s.sensor_range;
      m.min_robot_obstacle = std::min(m.min_robot_obstacle, gap - a.radius);
      for (std::size_t k = 0; k < s.peaks.size(); ++k) {
        if (distance(a.position, s.peaks[k].center) <= s.detect_radius) detected[k] = true;
      }
    }
    if (m.min_robot_robot < -1e-6 || m.min_robot_obstacle < -1e-6) m.collision = true;
  };
  auto all_detected = [&]() { return std::all_of(detected.begin(), detected.end(), [](bool d) { return d; }); };

  const auto max_steps = static_cast<std::size_t>(std::llround(s.t_max / s.dt));
  monitor();
  bool all_converged = false;
  bool aborted = false;
  std::size_t k = 0;
  for (;; ++k) {
    if (m.collision) {
      m.termination = "collision";
      break;
    }
    if (all_detected()) {
      m.termination = "all peaks detected";
      break;
    }
    if (k >= max_steps) {
      m.timed_out = true;
      m.termination = "time limit";
      break;
    }
    const double t = static_cast<double>(k) * s.dt;
    StepReport rep;
    try {
      rep = step(world, robots, t);
    } catch (const Error& e) {
      aborted = true;
      m.termination = "aborted";
      m.diagnostic = e.what();
      break;
    }
    for (const RobotStep& rs : rep.robots) {
      m.map_ms.push_back(rs.map_ms);
      m.cell_ms.push_back(rs.cell_ms);
      m.hidden_faces_added += rs.hidden_added;
      if (s.record_trajectory) result.trajectory.push_back({t, rs.robot_id, rs.position, rs.velocity});
    }
    if (options.keep_step_reports) result.steps.push_back(std::move(rep));
    monitor();

    bool stop = false;
    for (std::size_t i = 0; i < robots.size(); ++i) {
      if (!m.deadlocked[i] && detect_deadlock(robots[i], dl)) {
        m.deadlocked[i] = true;
        if (s.stop_on_deadlock) stop = true;
      }
    }
    all_converged = std::all_of(robots.begin(), robots.end(), [](const RobotState& r) { return r.converged; });
    if (stop) {
      m.termination = "deadlock";
      ++k;
      break;
    }
    if (all_converged) {
      m.termination = "all robots converged";
      ++k;
      break;
    }
  }
  m.steps = k;
  m.elapsed = static_cast<double>(k) * s.dt;
  if (m.collision) m.termination = "collision";

  if (all_converged && !all_detected()) {
    for (std::size_t i = 0; i < robots.size(); ++i) {
      const Point3& p = robots[i].disk.position;
      const bool near_peak = std::any_of(s.peaks.begin(), s.peaks.end(), [&](const GmmComponent& pk) {
        return distance(pk.center, p) <= s.stall_radius;
      });
      if (!near_peak) m.deadlocked[i] = true;
    }
  }
  m.peaks_detected = static_cast<std::size_t>(std::count(detected.begin(), detected.end(), true));
  m.success = !m.collision && !aborted && !m.any_deadlock() && !m.timed_out && (all_detected() || all_converged);

  for (const RobotState& r : robots) result.final_positions.push_back(r.disk.position);
  m.wall_ms = elapsed_ms(wall_start);
  return result;
}

}  // namespace cover
