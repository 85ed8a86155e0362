#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cover/coverage_control.hpp"
#include "cover/environment.hpp"
#include "cover/guided_map.hpp"
#include "cover/safe_region.hpp"

namespace cover {

/// Invalid scenario or command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Which density feeds the centroid. The safety machinery is identical for
/// all of them.
enum class Policy {
  proposed,        ///< exp(-gamma * cost-to-go) toward the local density maximum
  greedy_density,  ///< the target density itself, no navigation function
  pure_cvt,        ///< uniform density
};

Policy policy_variant(std::string_view name);
std::string_view to_string(Policy policy);

struct Scenario {
  Box workspace{{0, 0, 0}, {40, 40, 0.25}};
  std::vector<Point3> obstacles;

  int robot_count = 1;
  /// Explicit start positions; sampled from `spawn` with `seed` when empty.
  std::vector<Point3> initial_positions;
  std::optional<Box> spawn;
  double robot_radius = 0.25;

  double sensor_range = 15.0;
  double resolution = 0.25;

  double u_max = 2.5;
  double dt = 0.1;
  double converge_tol = 0.01;
  double t_max = 30.0;
  /// A peak counts as detected once a robot comes this close to its center.
  double detect_radius = 1.0;
  /// A converged robot farther than this from every peak is stalled.
  double stall_radius = 3.0;
  int deadlock_window = 50;
  /// Neighbors farther than this are ignored; unset means all robots.
  std::optional<double> neighbor_cutoff;
  bool stop_on_deadlock = true;

  double gamma = 1.0;
  std::vector<GmmComponent> peaks;

  Policy policy = Policy::proposed;
  std::uint64_t seed = 0;
  bool record_trajectory = true;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Immutable shared world for one trial.
struct World {
  explicit World(const Scenario& scenario);

  Scenario scenario;
  PointCloudIndex index;
  GmmDensity density;
  GridSpec grid;
  SensorModel sensor;
};

struct RobotState {
  RobotDisk disk;
  KnownMap known;
  VoxelGrid traversable;
  std::optional<NavField> nav;
  bool converged = false;
  bool deadlocked = false;
  /// Position and time at the start of every step, plus the current one.
  std::vector<Point3> positions;
  std::vector<double> times;
};

struct RobotStep {
  int robot_id = 0;
  Point3 position;
  Vec3 velocity;
  Point3 centroid;
  double cost = 0.0;          ///< H_i at the step-start position
  double cost_after = 0.0;    ///< H_i on the same cell at the post-step position
  std::size_t cell_faces = 0;
  std::size_t selected_obstacles = 0;
  std::size_t hidden_added = 0;
  std::size_t sensed = 0;
  bool goal_changed = false;
  bool nav_recomputed = false;
  bool step_inside_cell = true;
  double map_ms = 0.0;
  double cell_ms = 0.0;
};

struct StepReport {
  double t = 0.0;
  std::vector<RobotStep> robots;
};

/// Creates robot states at the scenario start positions (sampling them when
/// needed). Throws ConfigError if the start is not collision-free.
std::vector<RobotState> initial_states(const World& world);

/// One synchronous round: every robot plans from the same position snapshot,
/// then all move. Throws ClearanceError / GeometryError from cell building.
StepReport step(const World& world, std::vector<RobotState>& robots, double t);

struct DeadlockParams {
  int window = 50;
  double resolution = 0.25;
  double detect_radius = 1.0;
  std::vector<Point3> peaks;
};

/// True iff over the last `window` steps the robot stayed within
/// 0.5 * resolution of its current position, is not converged and has no
/// peak within detect_radius.
bool detect_deadlock(const RobotState& state, const DeadlockParams& params);

struct TrajectoryRow {
  double t = 0.0;
  int robot_id = 0;
  Point3 position;
  Vec3 velocity;
};

struct TrialMetrics {
  std::size_t peaks_detected = 0;
  std::size_t peaks_total = 0;
  bool success = false;
  double elapsed = 0.0;  ///< simulated seconds
  std::size_t steps = 0;
  double min_robot_robot = 0.0;     ///< surface distance, meters
  double min_robot_obstacle = 0.0;  ///< surface distance, meters
  bool collision = false;
  bool timed_out = false;
  std::vector<bool> deadlocked;
  std::vector<double> map_ms;   ///< one entry per robot step
  std::vector<double> cell_ms;  ///< one entry per robot step
  std::size_t hidden_faces_added = 0;
  double wall_ms = 0.0;
  std::string termination;
  std::string diagnostic;
  std::uint64_t seed = 0;
  Policy policy = Policy::proposed;

  double coverage_ratio() const {
    return peaks_total ? static_cast<double>(peaks_detected) / static_cast<double>(peaks_total) : 0.0;
  }
  bool any_deadlock() const;
};

struct TrialResult {
  TrialMetrics metrics;
  std::vector<TrajectoryRow> trajectory;
  std::vector<Point3> final_positions;
  /// Per step, per robot (robot order), when requested.
  std::vector<StepReport> steps;
};

struct TrialOptions {
  bool keep_step_reports = false;
};

TrialResult run_trial(const Scenario& scenario, const TrialOptions& options = {});

}  // namespace cover
