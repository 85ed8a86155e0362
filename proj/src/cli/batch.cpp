#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "cover/cli.hpp"

namespace cover::cli {

namespace fs = std::filesystem;

unsigned worker_count(std::size_t tasks) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COVER_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, tasks)));
}

RunReport run_batch(const BatchSpec& spec, const std::function<Scenario(Policy, std::uint64_t)>& make,
                    unsigned threads) {
  if (spec.trials < 1) throw ConfigError("number of trials must be at least 1");
  if (spec.policies.empty()) throw ConfigError("at least one policy is required");

  // Scenarios are built up front so that configuration errors surface before
  // any trial runs.
  std::vector<Scenario> scenarios;
  std::vector<ReportRow> rows;
  for (Policy policy : spec.policies) {
    for (std::size_t k = 0; k < spec.trials; ++k) {
      Scenario s = make(policy, spec.base_seed + k);
      s.policy = policy;
      s.record_trajectory = false;
      s.validate();
      scenarios.push_back(std::move(s));
      ReportRow row;
      row.policy = std::string(to_string(policy));
      row.trial = k;
      row.seed = spec.base_seed + k;
      rows.push_back(std::move(row));
    }
  }

  const unsigned workers = threads ? threads : worker_count(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      try {
        const TrialMetrics m = run_trial(scenarios[i]).metrics;
        ReportRow& row = rows[i];
        row.success = m.success;
        row.coverage_ratio = m.coverage_ratio();
        row.elapsed = m.elapsed;
        row.wall_ms = m.wall_ms;
        row.metrics = metrics_to_json(m, scenarios[i].detect_radius);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  RunReport report;
  report.rows = std::move(rows);
  report.aggregates = aggregate(report.rows);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

std::vector<std::string> split_policies(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const std::string& n : names) {
    std::size_t start = 0;
    while (start <= n.size()) {
      const std::size_t comma = n.find(',', start);
      const std::string item = n.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

int cmd_run(const fs::path& scenario_path, std::optional<std::uint64_t> seed, const fs::path& out_dir,
            std::optional<std::string> policy, std::ostream& err) {
  ScenarioFile file;
  TrialResult result;
  try {
    file = load_scenario(scenario_path);
    if (seed) file.scenario.seed = *seed;
    if (policy) file.scenario.policy = policy_variant(*policy);
    ensure_dir(out_dir);
    result = run_trial(file.scenario);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  const Scenario& s = file.scenario;
  try {
    {
      std::ofstream csv(out_dir / "trajectory.csv");
      write_trajectory_csv(csv, result.trajectory);
    }
    {
      std::ofstream metrics(out_dir / "metrics.json");
      metrics << metrics_to_json(result.metrics, s.detect_radius).dump() << '\n';
    }
    emit_plot({s.workspace, s.obstacles, s.peaks, result.trajectory}, file.output.plane, out_dir / "plot.svg");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const TrialMetrics& m = result.metrics;
  if (!m.success) {
    err << "trial failed: " << m.termination;
    if (!m.diagnostic.empty()) err << " (" << m.diagnostic << ")";
    err << '\n';
    return 2;
  }
  return 0;
}

int cmd_batch(const BatchArgs& args, std::ostream& out, std::ostream& err) {
  RunReport report;
  try {
    if (args.scenario.has_value() == args.family.has_value()) {
      throw ConfigError("give exactly one of --scenario and --family");
    }
    if (args.trials < 1) throw ConfigError("number of trials must be at least 1");
    BatchSpec spec;
    spec.trials = args.trials;
    spec.base_seed = args.seed;
    for (const std::string& name : split_policies(args.policies)) spec.policies.push_back(policy_variant(name));

    std::function<Scenario(Policy, std::uint64_t)> make;
    if (args.scenario) {
      const Scenario base = load_scenario(*args.scenario).scenario;
      make = [base](Policy p, std::uint64_t seed) {
        Scenario s = base;
        s.policy = p;
        s.seed = seed;
        return s;
      };
    } else {
      const Family family = parse_family(*args.family);
      make = [family](Policy p, std::uint64_t seed) { return family_scenario(family, seed, p); };
    }
    ensure_dir(args.out_dir);
    report = run_batch(spec, make);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  {
    std::ofstream jsonl(args.out_dir / "metrics.jsonl");
    for (const ReportRow& r : report.rows) jsonl << r.metrics.dump() << '\n';
  }
  {
    std::ofstream json_out(args.out_dir / "report.json");
    json_out << report_to_json(report).dump(2) << '\n';
  }
  const std::string table = summary_table(report);
  {
    std::ofstream txt(args.out_dir / "summary.txt");
    txt << table;
  }
  out << table;
  return 0;
}

int cmd_gen_env(const GenEnvArgs& args, std::ostream& err) {
  try {
    EnvSpec spec;
    spec.kind = parse_env_kind(args.kind);
    spec.density = args.density;
    spec.seed = args.seed;
    if (args.workspace) spec.workspace = *args.workspace;
    const std::vector<Point3> points = generate_environment(spec);
    {
      std::ofstream out(args.out);
      if (!out) throw ConfigError("cannot write '" + args.out.string() + "'");
      write_xyz(out, points);
    }
    if (args.scenario_out) {
      // A runnable scenario around the cloud: one robot, one peak.
      ScenarioFile file;
      Scenario& s = file.scenario;
      s.workspace = spec.workspace;
      s.obstacles = points;
      s.seed = args.seed;
      const Vec3 e = spec.workspace.extent();
      const Point3 mid = spec.workspace.min + e * 0.5;
      s.peaks = {{mid, 1.0, 5.0}};
      file.cloud.kind = CloudSource::Kind::file;
      file.cloud.format = CloudFormat::xyz;
      const fs::path dir = args.scenario_out->parent_path();
      std::error_code ec;
      const fs::path rel = fs::relative(fs::absolute(args.out), fs::absolute(dir.empty() ? fs::path(".") : dir), ec);
      file.cloud.path = ec || rel.empty() ? fs::absolute(args.out) : rel;
      save_scenario(file, *args.scenario_out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_plot(const fs::path& scenario_path, const fs::path& trajectory, std::string_view plane, const fs::path& out,
             std::ostream& err) {
  try {
    const ScenarioFile file = load_scenario(scenario_path);
    std::vector<TrajectoryRow> rows;
    if (!trajectory.empty()) {
      std::ifstream in(trajectory);
      if (!in) throw ConfigError("cannot open trajectory '" + trajectory.string() + "'");
      rows = read_trajectory_csv(in);
    }
    const Scenario& s = file.scenario;
    emit_plot({s.workspace, s.obstacles, s.peaks, rows}, parse_plane(plane), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace cover::cli
