#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "cover/cli.hpp"

namespace cover::cli {

namespace {

json stats(std::vector<double> v) {
  if (v.empty()) return {{"count", 0}};
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return {{"count", n}, {"mean", sum / n}, {"median", median}, {"max", v.back()}};
}

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "t,robot_id,x,y,z,ux,uy,uz\n";
  out.precision(17);
  for (const TrajectoryRow& r : rows) {
    out << r.t << ',' << r.robot_id << ',' << r.position.x << ',' << r.position.y << ',' << r.position.z << ','
        << r.velocity.x << ',' << r.velocity.y << ',' << r.velocity.z << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,robot_id,x,y,z,ux,uy,uz") {
    throw ParseError("expected header t,robot_id,x,y,z,ux,uy,uz", 1);
  }
  std::vector<TrajectoryRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    TrajectoryRow r;
    if (!(fields >> r.t >> r.robot_id >> r.position.x >> r.position.y >> r.position.z >> r.velocity.x >>
          r.velocity.y >> r.velocity.z)) {
      throw ParseError("expected 8 fields", number);
    }
    rows.push_back(r);
  }
  return rows;
}

json metrics_to_json(const TrialMetrics& m, double detect_radius) {
  json deadlocked = json::array();
  for (bool d : m.deadlocked) deadlocked.push_back(d);
  return {{"seed", m.seed},
          {"policy", std::string(to_string(m.policy))},
          {"success", m.success},
          {"peaks_detected", m.peaks_detected},
          {"peaks_total", m.peaks_total},
          {"coverage_ratio", m.coverage_ratio()},
          {"detect_radius_m", detect_radius},
          {"elapsed_s", m.elapsed},
          {"steps", m.steps},
          {"min_robot_robot_m", m.min_robot_robot},
          {"min_robot_obstacle_m", m.min_robot_obstacle},
          {"collision", m.collision},
          {"timed_out", m.timed_out},
          {"deadlocked", deadlocked},
          {"deadlock", m.any_deadlock()},
          {"map_ms", stats(m.map_ms)},
          {"cell_ms", stats(m.cell_ms)},
          {"hidden_faces_added", m.hidden_faces_added},
          {"wall_ms", m.wall_ms},
          {"termination", m.termination},
          {"diagnostic", m.diagnostic}};
}

std::vector<Aggregate> aggregate(const std::vector<ReportRow>& rows) {
  std::vector<Aggregate> out;
  for (const ReportRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.policy == r.policy; });
    if (it == out.end()) {
      out.push_back({});
      it = out.end() - 1;
      it->policy = r.policy;
    }
  }
  for (Aggregate& a : out) {
    double coverage = 0.0, time = 0.0, wall = 0.0;
    for (const ReportRow& r : rows) {
      if (r.policy != a.policy) continue;
      ++a.trials;
      coverage += r.coverage_ratio;
      if (r.success) {
        ++a.successes;
        time += r.elapsed;
        wall += r.wall_ms;
      }
    }
    a.success_rate = static_cast<double>(a.successes) / static_cast<double>(a.trials);
    a.mean_coverage_ratio = coverage / static_cast<double>(a.trials);
    if (a.successes) {
      a.mean_time_success = time / static_cast<double>(a.successes);
      a.mean_wall_ms_success = wall / static_cast<double>(a.successes);
    }
  }
  return out;
}

json report_to_json(const RunReport& report) {
  json rows = json::array();
  for (const ReportRow& r : report.rows) {
    rows.push_back({{"policy", r.policy},
                    {"trial", r.trial},
                    {"seed", r.seed},
                    {"success", r.success},
                    {"coverage_ratio", r.coverage_ratio},
                    {"elapsed_s", r.elapsed},
                    {"wall_ms", r.wall_ms},
                    {"metrics", r.metrics}});
  }
  json aggs = json::array();
  for (const Aggregate& a : report.aggregates) {
    aggs.push_back({{"policy", a.policy},
                    {"trials", a.trials},
                    {"successes", a.successes},
                    {"success_rate", a.success_rate},
                    {"mean_coverage_ratio", a.mean_coverage_ratio},
                    {"mean_time_success_s", a.mean_time_success ? json(*a.mean_time_success) : json(nullptr)},
                    {"mean_wall_ms_success", a.mean_wall_ms_success ? json(*a.mean_wall_ms_success) : json(nullptr)}});
  }
  return {{"rows", rows}, {"aggregates", aggs}};
}

std::string summary_table(const RunReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %7s %8s %13s %15s %13s\n", "policy", "trials", "success", "success rate",
                "coverage ratio", "avg time (s)");
  out << line;
  for (const Aggregate& a : report.aggregates) {
    const std::string time = a.mean_time_success ? fmt("%.2f", *a.mean_time_success) : "-";
    std::snprintf(line, sizeof line, "%-16s %7zu %8zu %12.2f%% %15.4f %13s\n", a.policy.c_str(), a.trials,
                  a.successes, 100.0 * a.success_rate, a.mean_coverage_ratio, time.c_str());
    out << line;
  }
  out << "time = simulated seconds, averaged over successful trials\n";
  return out.str();
}

}  // namespace cover::cli
