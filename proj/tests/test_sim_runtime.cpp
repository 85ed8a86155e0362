#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cover/cli.hpp"
#include "cover/sim_runtime.hpp"

using namespace cover;

namespace {

Scenario open_plane() {
  Scenario s;
  s.workspace = Box{{0, 0, 0}, {20, 20, 0.25}};
  s.peaks = {{{15, 5, 0.125}, 1.0, 2.0}};
  return s;
}

RobotState parked(const std::vector<Point3>& track, bool converged = false) {
  RobotState st;
  st.disk = {0, track.back(), 0.25};
  st.positions = track;
  st.converged = converged;
  return st;
}

}  // namespace

TEST_CASE("policy names") {
  CHECK(policy_variant("proposed") == Policy::proposed);
  CHECK(policy_variant("greedy-density") == Policy::greedy_density);
  CHECK(policy_variant("pure-cvt") == Policy::pure_cvt);
  CHECK(to_string(Policy::greedy_density) == "greedy-density");
  CHECK_THROWS_AS(policy_variant("greedy"), ConfigError);
}

TEST_CASE("validation rejects bad scenarios") {
  Scenario s = open_plane();
  CHECK_NOTHROW(s.validate());
  s.dt = 0;
  CHECK_THROWS_WITH_AS(s.validate(), "dt must be positive", ConfigError);
  s = open_plane();
  s.peaks.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = open_plane();
  s.robot_count = 2;
  s.initial_positions = {{1, 1, 0.125}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.initial_positions = {{1, 1, 0.125}, {1.3, 1, 0.125}};
  const World w(s);
  CHECK_THROWS_WITH_AS(initial_states(w), "start positions overlap", ConfigError);
}

TEST_CASE("one robot advances at most u_max * dt toward a far peak") {
  Scenario s = open_plane();
  s.initial_positions = {{5, 5, 0.125}};
  const World w(s);
  auto robots = initial_states(w);
  const StepReport r = step(w, robots, 0.0);
  const Point3 p = robots[0].disk.position;
  CHECK(distance(p, {5, 5, 0.125}) <= 0.25 + 1e-12);
  CHECK(distance(p, {5, 5, 0.125}) > 0.2);
  CHECK(p.x > 5.0);
  CHECK(r.robots[0].step_inside_cell);
}

TEST_CASE("head-on pair never comes closer than 2r") {
  Scenario s = open_plane();
  s.robot_count = 2;
  s.initial_positions = {{5, 10, 0.125}, {15, 10, 0.125}};
  s.peaks = {{{10, 10, 0.125}, 1.0, 2.0}};
  s.policy = Policy::greedy_density;
  const World w(s);
  auto robots = initial_states(w);
  for (int k = 0; k < 80; ++k) {
    const StepReport r = step(w, robots, k * s.dt);
    CHECK(distance(robots[0].disk.position, robots[1].disk.position) >= 0.5 - 1e-9);
    for (const RobotStep& rs : r.robots) CHECK(rs.step_inside_cell);
  }
}

TEST_CASE("trivial trial succeeds quickly") {
  Scenario s = open_plane();
  s.initial_positions = {{14.5, 5, 0.125}};
  const TrialResult r = run_trial(s);
  CHECK(r.metrics.success);
  CHECK(r.metrics.peaks_detected == 1);
  CHECK(r.metrics.elapsed < 1.0);
  CHECK(r.metrics.termination == "all peaks detected");
}

TEST_CASE("trajectory timestamps advance by dt") {
  Scenario s = open_plane();
  s.robot_count = 2;
  s.initial_positions = {{2, 2, 0.125}, {2, 8, 0.125}};
  s.t_max = 3.0;
  const TrialResult r = run_trial(s);
  REQUIRE(r.trajectory.size() == 2 * r.metrics.steps);
  for (std::size_t k = 2; k < r.trajectory.size(); ++k) {
    CHECK(r.trajectory[k].t == doctest::Approx(r.trajectory[k - 2].t + s.dt));
  }
  CHECK(r.metrics.map_ms.size() == 2 * r.metrics.steps);
  CHECK(r.metrics.cell_ms.size() == 2 * r.metrics.steps);
}

TEST_CASE("two robots pushed at a 0.4 m gap never collide") {
  Scenario s;
  s.workspace = Box{{0, 0, 0}, {12, 10, 0.25}};
  for (double y = 0.05; y < 10; y += 0.1) {
    if (std::abs(y - 5.0) > 0.2) s.obstacles.push_back({6, y, 0.125});
  }
  s.robot_count = 2;
  s.initial_positions = {{2, 4.4, 0.125}, {2, 5.6, 0.125}};
  s.peaks = {{{10, 5, 0.125}, 1.0, 2.0}};
  s.t_max = 20;
  for (Policy policy : {Policy::proposed, Policy::greedy_density}) {
    s.policy = policy;
    TrialOptions opt;
    opt.keep_step_reports = true;
    const TrialResult r = run_trial(s, opt);
    CHECK_FALSE(r.metrics.collision);
    CHECK(r.metrics.min_robot_robot >= -1e-6);
    CHECK(r.metrics.min_robot_obstacle >= -1e-6);
    for (const StepReport& sr : r.steps) {
      for (const RobotStep& rs : sr.robots) CHECK(rs.step_inside_cell);
    }
  }
}

TEST_CASE("U-trap: proposed escapes, greedy stalls") {
  const Scenario proposed = cli::family_scenario(cli::Family::u_trap, 0, Policy::proposed);
  const TrialResult a = run_trial(proposed);
  CHECK(a.metrics.success);

  const Scenario greedy = cli::family_scenario(cli::Family::u_trap, 0, Policy::greedy_density);
  const TrialResult b = run_trial(greedy);
  CHECK_FALSE(b.metrics.success);
  CHECK(b.metrics.any_deadlock());
  CHECK_FALSE(b.metrics.collision);
}

TEST_CASE("deadlock detection") {
  DeadlockParams params;
  params.window = 50;
  params.peaks = {{20, 20, 0}};
  std::vector<Point3> wobble;
  for (int k = 0; k <= 50; ++k) wobble.push_back({5 + 0.05 * std::sin(k * 1.3), 5, 0});
  CHECK(detect_deadlock(parked(wobble), params));
  CHECK_FALSE(detect_deadlock(parked(wobble, true), params));

  std::vector<Point3> moving;
  for (int k = 0; k <= 50; ++k) moving.push_back({5 + 0.25 * k, 5, 0});
  CHECK_FALSE(detect_deadlock(parked(moving), params));

  params.peaks = {{5.5, 5, 0}};
  CHECK_FALSE(detect_deadlock(parked(wobble), params));

  std::vector<Point3> short_track(wobble.begin(), wobble.begin() + 10);
  params.peaks = {{20, 20, 0}};
  CHECK_FALSE(detect_deadlock(parked(short_track), params));
}

TEST_CASE("seeded trials are deterministic apart from timing") {
  const Scenario s = cli::family_scenario(cli::Family::cluttered, 5, Policy::proposed);
  const TrialResult a = run_trial(s), b = run_trial(s);
  CHECK(a.final_positions == b.final_positions);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
    CHECK(a.trajectory[k].position == b.trajectory[k].position);
    CHECK(a.trajectory[k].velocity == b.trajectory[k].velocity);
  }
  CHECK(a.metrics.steps == b.metrics.steps);
  CHECK(a.metrics.success == b.metrics.success);
  CHECK(a.metrics.min_robot_obstacle == b.metrics.min_robot_obstacle);
  CHECK(a.metrics.min_robot_robot == b.metrics.min_robot_robot);
  CHECK(a.metrics.termination == b.metrics.termination);
  CHECK(a.metrics.hidden_faces_added == b.metrics.hidden_faces_added);
}

TEST_CASE("sampled starts respect clearance") {
  Scenario s = cli::family_scenario(cli::Family::cluttered, 9, Policy::proposed);
  s.robot_count = 6;
  const World w(s);
  const auto robots = initial_states(w);
  REQUIRE(robots.size() == 6);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    CHECK(w.index.nearest_distance(robots[i].disk.position, 2.0) >= 2 * s.robot_radius);
    for (std::size_t j = i + 1; j < robots.size(); ++j) {
      CHECK(distance(robots[i].disk.position, robots[j].disk.position) >= 4 * s.robot_radius);
    }
  }
}
