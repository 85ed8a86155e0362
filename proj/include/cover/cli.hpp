#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cover/sim_runtime.hpp"

namespace cover::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario files

enum class PlotPlane { xy, xz };

PlotPlane parse_plane(std::string_view name);
std::string_view to_string(PlotPlane plane);

/// Where the obstacle cloud of a scenario file comes from.
struct CloudSource {
  enum class Kind { none, file, inline_points, generator };
  Kind kind = Kind::none;
  std::filesystem::path path;  ///< as written in the file (relative to the scenario)
  CloudFormat format = CloudFormat::xyz;
  std::string generator;  ///< environment kind
  double density = 0.05;
  std::uint64_t generator_seed = 0;
};

struct OutputSettings {
  bool trajectory = true;
  PlotPlane plane = PlotPlane::xy;
};

struct ScenarioFile {
  Scenario scenario;
  CloudSource cloud;
  OutputSettings output;
};

/// Parses a scenario document. Relative cloud paths resolve against
/// `base_dir`. Unknown keys and ill-typed values throw ConfigError.
ScenarioFile parse_scenario(const json& doc, const std::filesystem::path& base_dir = {});
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Serializes a scenario. Inline points are written when the cloud source is
/// `none` or `inline_points` and the scenario has obstacles.
json scenario_to_json(const ScenarioFile& file);
void save_scenario(const ScenarioFile& file, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Environment generators

enum class EnvKind { cluttered, u_trap, corridor, forest_like };

EnvKind parse_env_kind(std::string_view name);
std::string_view to_string(EnvKind kind);

struct EnvSpec {
  EnvKind kind = EnvKind::cluttered;
  /// Obstacle points per cubic meter (cluttered, forest-like).
  double density = 0.05;
  std::uint64_t seed = 0;
  Box workspace{{0, 0, 0}, {80, 80, 16}};
  double spacing = 0.25;
};

/// Deterministic per spec. Points lie at voxel-center heights so that planar
/// workspaces (one layer) see every obstacle.
std::vector<Point3> generate_environment(const EnvSpec& spec);

/// U-shaped wall: bottom wall at y = bottom_y spanning [x0, x1], side walls
/// from y0 to bottom_y. The opening faces -y.
std::vector<Point3> u_wall(double x0, double x1, double y0, double bottom_y, const Box& workspace,
                           double spacing = 0.25);

/// Seeded scenario families used for policy comparisons.
enum class Family { u_trap, cluttered };

Family parse_family(std::string_view name);
std::string_view to_string(Family family);
Scenario family_scenario(Family family, std::uint64_t seed, Policy policy = Policy::proposed);

// ---------------------------------------------------------------------------
// Output

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

json metrics_to_json(const TrialMetrics& metrics, double detect_radius);

struct Aggregate {
  std::string policy;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_coverage_ratio = 0.0;
  /// Simulated seconds, successful trials only; unset without successes.
  std::optional<double> mean_time_success;
  std::optional<double> mean_wall_ms_success;
};

struct ReportRow {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  bool success = false;
  double coverage_ratio = 0.0;
  double elapsed = 0.0;
  double wall_ms = 0.0;
  json metrics;
};

struct RunReport {
  std::vector<ReportRow> rows;
  std::vector<Aggregate> aggregates;  ///< one per policy, in first-seen order
};

std::vector<Aggregate> aggregate(const std::vector<ReportRow>& rows);
json report_to_json(const RunReport& report);
std::string summary_table(const RunReport& report);

// ---------------------------------------------------------------------------
// Plots

struct PlotInput {
  Box workspace;
  std::vector<Point3> obstacles;
  std::vector<GmmComponent> peaks;
  std::vector<TrajectoryRow> trajectory;
};

/// Marching-squares segments of `values` (row-major, nx * ny samples on a
/// regular lattice) at `level`. Coordinates are in sample units.
struct Segment {
  double x0, y0, x1, y1;
};
std::vector<Segment> marching_squares(const std::vector<double>& values, int nx, int ny, double level);

std::string render_svg(const PlotInput& input, PlotPlane plane);
void emit_plot(const PlotInput& input, PlotPlane plane, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Batches

/// Worker count: hardware concurrency, capped by COVER_THREADS and the number
/// of tasks.
unsigned worker_count(std::size_t tasks);

struct BatchSpec {
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
  std::vector<Policy> policies;
};

/// Trial k of every policy uses seed base_seed + k. `make` builds the
/// scenario for a (policy, seed) pair.
RunReport run_batch(const BatchSpec& spec, const std::function<Scenario(Policy, std::uint64_t)>& make,
                    unsigned threads = 0);

// ---------------------------------------------------------------------------
// Commands. Each returns the process exit code.

int cmd_run(const std::filesystem::path& scenario, std::optional<std::uint64_t> seed,
            const std::filesystem::path& out_dir, std::optional<std::string> policy, std::ostream& err);

struct BatchArgs {
  std::optional<std::filesystem::path> scenario;
  std::optional<std::string> family;
  std::size_t trials = 30;
  std::uint64_t seed = 0;
  std::vector<std::string> policies{"proposed", "greedy-density"};
  std::filesystem::path out_dir = ".";
};
int cmd_batch(const BatchArgs& args, std::ostream& out, std::ostream& err);

struct GenEnvArgs {
  std::string kind;
  double density = 0.05;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<Box> workspace;
  std::optional<std::filesystem::path> scenario_out;
};
int cmd_gen_env(const GenEnvArgs& args, std::ostream& err);

int cmd_plot(const std::filesystem::path& scenario, const std::filesystem::path& trajectory,
             std::string_view plane, const std::filesystem::path& out, std::ostream& err);

}  // namespace cover::cli
