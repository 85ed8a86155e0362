#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cover/cli.hpp"

using namespace cover;
using namespace cover::cli;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cover_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++n;
  return n;
}

json trivial_doc() {
  return json::parse(R"({
    "seed": 1,
    "workspace": {"min": [0, 0, 0], "max": [20, 20, 0.25], "resolution": 0.25},
    "robots": {"count": 1, "radius": 0.25, "positions": [[14.5, 5, 0.125]]},
    "density": {"gamma": 1.0, "peaks": [{"center": [15, 5, 0.125], "weight": 1.0, "sigma": 2.0}]}
  })");
}

fs::path write_doc(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "scenario.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

ScenarioFile u_trap_file(Policy policy) {
  ScenarioFile f;
  f.scenario = family_scenario(Family::u_trap, 0, policy);
  f.cloud.kind = CloudSource::Kind::inline_points;
  return f;
}

}  // namespace

TEST_CASE("scenario json round trip") {
  ScenarioFile f;
  f.scenario = family_scenario(Family::cluttered, 4, Policy::greedy_density);
  f.scenario.neighbor_cutoff = 6.0;
  f.scenario.initial_positions = {{3, 10, 0.125}, {3, 20, 0.125}};
  f.scenario.spawn.reset();
  f.output.plane = PlotPlane::xz;
  const ScenarioFile back = parse_scenario(scenario_to_json(f));
  CHECK(back.scenario == f.scenario);
  CHECK(back.output.plane == PlotPlane::xz);
  CHECK(scenario_to_json(back) == scenario_to_json(f));
}

TEST_CASE("unknown keys name the key") {
  json doc = trivial_doc();
  doc["robbot"] = 1;
  const fs::path dir = scratch("unknown");
  std::ostringstream err;
  CHECK(cmd_run(write_doc(dir, doc), std::nullopt, dir / "out", std::nullopt, err) == 1);
  CHECK(err.str().find("robbot") != std::string::npos);

  json nested = trivial_doc();
  nested["robots"]["radiuss"] = 0.3;
  CHECK_THROWS_WITH_AS(parse_scenario(nested), doctest::Contains("radiuss"), ConfigError);
}

TEST_CASE("ill-typed and missing sections are config errors") {
  json doc = trivial_doc();
  doc["robots"]["count"] = "two";
  CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
  json no_ws = trivial_doc();
  no_ws.erase("workspace");
  CHECK_THROWS_AS(parse_scenario(no_ws), ConfigError);
  json bad_policy = trivial_doc();
  bad_policy["policy"] = "random";
  CHECK_THROWS_AS(parse_scenario(bad_policy), ConfigError);
}

TEST_CASE("run on a trivial scenario writes three files") {
  const fs::path dir = scratch("run");
  const fs::path out = dir / "out";
  std::ostringstream err;
  REQUIRE(cmd_run(write_doc(dir, trivial_doc()), std::nullopt, out, std::nullopt, err) == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "metrics.json"));
  CHECK(fs::exists(out / "plot.svg"));

  const json m = json::parse(slurp(out / "metrics.json"));
  CHECK(m["success"] == true);
  std::ifstream csv(out / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,robot_id,x,y,z,ux,uy,uz");
  std::ifstream again(out / "trajectory.csv");
  const auto rows = read_trajectory_csv(again);
  CHECK(rows.size() == m["steps"].get<std::size_t>());
}

TEST_CASE("greedy policy in the U-trap exits 2 with a deadlock") {
  const fs::path dir = scratch("utrap");
  save_scenario(u_trap_file(Policy::proposed), dir / "u.json");
  std::ostringstream err;
  CHECK(cmd_run(dir / "u.json", std::nullopt, dir / "greedy", std::string("greedy-density"), err) == 2);
  const json m = json::parse(slurp(dir / "greedy" / "metrics.json"));
  CHECK(m["success"] == false);
  CHECK(m["deadlock"] == true);
  CHECK(m["collision"] == false);
}

TEST_CASE("trajectory csv round trip") {
  std::vector<TrajectoryRow> rows{{0.0, 0, {1.0 / 3, 2, 3}, {0.1, -0.2, 0}}, {0.1, 1, {4, 5, 6}, {0, 0, 1e-17}}};
  std::stringstream buf;
  write_trajectory_csv(buf, rows);
  const auto back = read_trajectory_csv(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].position == rows[0].position);
  CHECK(back[1].velocity == rows[1].velocity);
  std::istringstream bad("t,robot_id,x,y,z,ux,uy,uz\n0,0,1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), ParseError);
}

TEST_CASE("batch argument checks") {
  std::ostringstream out, err;
  BatchArgs args;
  args.family = "u-trap";
  args.trials = 0;
  args.out_dir = scratch("batch0");
  CHECK(cmd_batch(args, out, err) == 1);
  BatchArgs neither;
  neither.out_dir = args.out_dir;
  CHECK(cmd_batch(neither, out, err) == 1);
  BatchArgs bad = args;
  bad.trials = 1;
  bad.policies = {"nope"};
  CHECK(cmd_batch(bad, out, err) == 1);
}

TEST_CASE("single-trial batch equals the single trial") {
  const fs::path dir = scratch("batch1");
  std::ostringstream out, err;
  BatchArgs args;
  args.family = "u-trap";
  args.trials = 1;
  args.seed = 3;
  args.policies = {"proposed"};
  args.out_dir = dir;
  REQUIRE(cmd_batch(args, out, err) == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report["aggregates"].size() == 1);
  const json& agg = report["aggregates"][0];

  Scenario s = family_scenario(Family::u_trap, 3, Policy::proposed);
  s.record_trajectory = false;
  const TrialResult r = run_trial(s);
  CHECK(agg["trials"] == 1);
  CHECK(agg["successes"] == (r.metrics.success ? 1 : 0));
  CHECK(agg["mean_coverage_ratio"].get<double>() == r.metrics.coverage_ratio());
  if (r.metrics.success) CHECK(agg["mean_time_success_s"].get<double>() == r.metrics.elapsed);
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(fs::exists(dir / "metrics.jsonl"));
}

TEST_CASE("two policies give two aggregate rows that recompute exactly") {
  const fs::path dir = scratch("batch2");
  std::ostringstream out, err;
  BatchArgs args;
  args.family = "u-trap";
  args.trials = 4;
  args.out_dir = dir;
  REQUIRE(cmd_batch(args, out, err) == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report["aggregates"].size() == 2);
  CHECK(report["aggregates"][0]["policy"] == "proposed");
  CHECK(report["aggregates"][1]["policy"] == "greedy-density");

  std::map<std::string, std::pair<int, int>> tally;
  std::map<std::string, std::set<std::uint64_t>> seeds;
  std::ifstream lines(dir / "metrics.jsonl");
  for (std::string line; std::getline(lines, line);) {
    const json m = json::parse(line);
    auto& t = tally[m["policy"].get<std::string>()];
    ++t.first;
    t.second += m["success"].get<bool>();
    seeds[m["policy"].get<std::string>()].insert(m["seed"].get<std::uint64_t>());
  }
  for (const json& agg : report["aggregates"]) {
    const auto& t = tally[agg["policy"].get<std::string>()];
    CHECK(agg["trials"].get<int>() == t.first);
    CHECK(agg["successes"].get<int>() == t.second);
    CHECK(agg["success_rate"].get<double>() == static_cast<double>(t.second) / t.first);
  }
  CHECK(seeds["proposed"] == seeds["greedy-density"]);
  CHECK(out.str().find("proposed") != std::string::npos);
}

TEST_CASE("aggregate arithmetic") {
  std::vector<ReportRow> rows;
  rows.push_back({"a", 0, 0, true, 1.0, 2.0, 10.0, {}});
  rows.push_back({"b", 0, 0, false, 0.5, 9.0, 10.0, {}});
  rows.push_back({"a", 1, 1, false, 0.0, 9.0, 30.0, {}});
  rows.push_back({"a", 2, 2, true, 1.0, 4.0, 20.0, {}});
  const auto agg = aggregate(rows);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].policy == "a");
  CHECK(agg[0].successes == 2);
  CHECK(agg[0].success_rate == doctest::Approx(2.0 / 3));
  CHECK(agg[0].mean_coverage_ratio == doctest::Approx(2.0 / 3));
  CHECK(*agg[0].mean_time_success == doctest::Approx(3.0));
  CHECK(*agg[0].mean_wall_ms_success == doctest::Approx(15.0));
  CHECK_FALSE(agg[1].mean_time_success.has_value());
}

TEST_CASE("gen-env kinds") {
  const fs::path dir = scratch("genenv");
  std::ostringstream err;
  GenEnvArgs bad{"volcano", 0.05, 1, dir / "v.xyz", std::nullopt, std::nullopt};
  CHECK(cmd_gen_env(bad, err) == 1);

  GenEnvArgs clutter{"cluttered", 0.05, 1, dir / "c.xyz", std::nullopt, dir / "c.json"};
  REQUIRE(cmd_gen_env(clutter, err) == 0);
  std::ifstream in(dir / "c.xyz");
  const auto pts = read_point_cloud(in, CloudFormat::xyz);
  CHECK(pts.size() >= 4608);
  CHECK(pts.size() <= 5632);
  const ScenarioFile reloaded = load_scenario(dir / "c.json");
  CHECK(reloaded.scenario.obstacles.size() == PointCloudIndex(pts).size());
  CHECK(reloaded.cloud.kind == CloudSource::Kind::file);
}

TEST_CASE("u-trap walls are sampled at the spacing") {
  EnvSpec spec;
  spec.kind = EnvKind::u_trap;
  spec.workspace = Box{{0, 0, 0}, {40, 40, 0.25}};
  const auto pts = generate_environment(spec);
  REQUIRE(pts.size() > 10);
  int far = 0;
  for (const Point3& p : pts) {
    double nearest = 1e9;
    for (const Point3& q : pts) {
      if (&p != &q) nearest = std::min(nearest, distance(p, q));
    }
    far += nearest > 0.25 + 1e-9;
  }
  CHECK(far == 0);
  CHECK(generate_environment(spec) == pts);
}

TEST_CASE("corridor is 1 m wide") {
  EnvSpec spec;
  spec.kind = EnvKind::corridor;
  spec.seed = 7;
  spec.workspace = Box{{0, 0, 0}, {40, 40, 0.25}};
  const auto pts = generate_environment(spec);
  double lo = 1e9, hi = -1e9;
  for (const Point3& p : pts) {
    if (std::abs(p.x - 18.0) < 0.2 && std::abs(p.y - 20.0) < 3.0) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
  }
  CHECK(hi - lo == doctest::Approx(1.0));
}

TEST_CASE("plot of an empty trajectory shows obstacles only") {
  PlotInput input{Box{{0, 0, 0}, {10, 10, 0.25}}, {{2, 2, 0.125}, {5, 5, 0.125}}, {{{8, 8, 0.125}, 1, 1}}, {}};
  const std::string svg = render_svg(input, PlotPlane::xy);
  CHECK(count(svg, "class=\"obstacle\"") == 2);
  CHECK(count(svg, "class=\"trajectory\"") == 0);
  CHECK(count(svg, "class=\"peak\"") == 1);

  for (int k = 0; k < 5; ++k) {
    input.trajectory.push_back({0.1 * k, 0, {1.0 + k, 1, 0.125}, {}});
    input.trajectory.push_back({0.1 * k, 1, {1.0 + k, 8, 0.125}, {}});
  }
  CHECK(count(render_svg(input, PlotPlane::xy), "class=\"trajectory\"") == 2);
}

TEST_CASE("plot command") {
  const fs::path dir = scratch("plot");
  std::ostringstream err;
  const fs::path scenario = write_doc(dir, trivial_doc());
  CHECK(cmd_plot(scenario, {}, "xy", dir / "a.svg", err) == 0);
  CHECK(slurp(dir / "a.svg").find("<svg") != std::string::npos);
  CHECK(cmd_plot(scenario, {}, "yz", dir / "b.svg", err) == 1);
  CHECK(cmd_plot(scenario, dir / "missing.csv", "xy", dir / "c.svg", err) == 1);
}

TEST_CASE("marching squares on known fields") {
  // f = x on a 5 x 3 lattice: the level 2.5 contour is the vertical line x = 2.5.
  std::vector<double> ramp;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) ramp.push_back(x);
  }
  const auto segs = marching_squares(ramp, 5, 3, 2.5);
  CHECK(segs.size() == 2);
  for (const Segment& s : segs) {
    CHECK(s.x0 == doctest::Approx(2.5));
    CHECK(s.x1 == doctest::Approx(2.5));
  }
  CHECK(marching_squares(ramp, 5, 3, 10.0).empty());

  // A radial bump: every segment endpoint sits near the circle of radius 3.
  const int n = 21;
  std::vector<double> bump;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) bump.push_back(std::hypot(x - 10.0, y - 10.0));
  }
  const auto ring = marching_squares(bump, n, n, 3.0);
  CHECK(ring.size() >= 12);
  for (const Segment& s : ring) {
    CHECK(std::hypot(s.x0 - 10, s.y0 - 10) == doctest::Approx(3.0).epsilon(0.05));
    CHECK(std::hypot(s.x1 - 10, s.y1 - 10) == doctest::Approx(3.0).epsilon(0.05));
  }
}

TEST_CASE("worker count honors COVER_THREADS") {
  ::setenv("COVER_THREADS", "2", 1);
  CHECK(worker_count(100) <= 2);
  CHECK(worker_count(1) == 1);
  ::setenv("COVER_THREADS", "1", 1);
  CHECK(worker_count(100) == 1);
  ::unsetenv("COVER_THREADS");
  CHECK(worker_count(100) >= 1);
}
