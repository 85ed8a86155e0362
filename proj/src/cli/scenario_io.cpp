#include <fstream>
#include <initializer_list>
#include <sstream>

#include "cover/cli.hpp"

namespace cover::cli {

namespace {

namespace fs = std::filesystem;

std::string qualified(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

void check_keys(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(section.empty() ? "scenario must be an object" : "'" + std::string(section) + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string msg = "unknown key '" + key + "'";
      if (!section.empty()) msg += " in '" + std::string(section) + "'";
      throw ConfigError(msg);
    }
  }
}

double get_number(const json& obj, std::string_view section, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("'" + qualified(section, key) + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& obj, std::string_view section, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError("'" + qualified(section, key) + "' must be true or false");
  return v.get<bool>();
}

std::uint64_t get_uint(const json& v, const std::string& name) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError("'" + name + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError("'" + name + "' must be a string");
  return v.get<std::string>();
}

Vec3 get_vec(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    throw ConfigError("'" + name + "' must be an array of three numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Box get_box(const json& v, const std::string& name) {
  check_keys(v, name, {"min", "max"});
  if (!v.contains("min") || !v.contains("max")) throw ConfigError("'" + name + "' needs min and max");
  return {get_vec(v.at("min"), name + ".min"), get_vec(v.at("max"), name + ".max")};
}

std::vector<Point3> get_points(const json& v, const std::string& name) {
  if (!v.is_array()) throw ConfigError("'" + name + "' must be an array");
  std::vector<Point3> pts;
  pts.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) pts.push_back(get_vec(v[i], name + "[" + std::to_string(i) + "]"));
  return pts;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json box_json(const Box& b) { return {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}}; }

std::vector<Point3> load_cloud_file(const fs::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open point cloud '" + path.string() + "'");
  try {
    return read_point_cloud(in, format);
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

PlotPlane parse_plane(std::string_view name) {
  if (name == "xy") return PlotPlane::xy;
  if (name == "xz") return PlotPlane::xz;
  throw ConfigError("unknown plot plane '" + std::string(name) + "'");
}

std::string_view to_string(PlotPlane plane) { return plane == PlotPlane::xy ? "xy" : "xz"; }

ScenarioFile parse_scenario(const json& doc, const fs::path& base_dir) {
  check_keys(doc, "", {"seed", "policy", "workspace", "robots", "sensor", "control", "density", "output"});
  ScenarioFile file;
  Scenario& s = file.scenario;

  if (doc.contains("seed")) s.seed = get_uint(doc.at("seed"), "seed");
  if (doc.contains("policy")) s.policy = policy_variant(get_string(doc.at("policy"), "policy"));

  if (!doc.contains("workspace")) throw ConfigError("missing section 'workspace'");
  const json& ws = doc.at("workspace");
  check_keys(ws, "workspace", {"min", "max", "resolution", "cloud"});
  if (!ws.contains("min") || !ws.contains("max")) throw ConfigError("'workspace' needs min and max");
  s.workspace = {get_vec(ws.at("min"), "workspace.min"), get_vec(ws.at("max"), "workspace.max")};
  s.resolution = get_number(ws, "workspace", "resolution", s.resolution);
  if (ws.contains("cloud")) {
    const json& c = ws.at("cloud");
    check_keys(c, "workspace.cloud", {"path", "format", "points", "generator", "density", "seed"});
    CloudSource& src = file.cloud;
    const int kinds = int(c.contains("path")) + int(c.contains("points")) + int(c.contains("generator"));
    if (kinds != 1) throw ConfigError("'workspace.cloud' needs exactly one of path, points, generator");
    if (c.contains("path")) {
      src.kind = CloudSource::Kind::file;
      src.path = get_string(c.at("path"), "workspace.cloud.path");
      if (c.contains("format")) {
        try {
          src.format = parse_cloud_format(get_string(c.at("format"), "workspace.cloud.format"));
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
      const fs::path full = src.path.is_absolute() ? src.path : base_dir / src.path;
      s.obstacles = load_cloud_file(full, src.format);
    } else if (c.contains("points")) {
      src.kind = CloudSource::Kind::inline_points;
      s.obstacles = get_points(c.at("points"), "workspace.cloud.points");
    } else {
      src.kind = CloudSource::Kind::generator;
      src.generator = get_string(c.at("generator"), "workspace.cloud.generator");
      src.density = get_number(c, "workspace.cloud", "density", src.density);
      if (c.contains("seed")) src.generator_seed = get_uint(c.at("seed"), "workspace.cloud.seed");
      EnvSpec env;
      env.kind = parse_env_kind(src.generator);
      env.density = src.density;
      env.seed = src.generator_seed;
      env.workspace = s.workspace;
      s.obstacles = generate_environment(env);
    }
  }

  if (doc.contains("robots")) {
    const json& r = doc.at("robots");
    check_keys(r, "robots", {"count", "radius", "positions", "spawn", "neighbor_cutoff"});
    if (r.contains("positions")) {
      s.initial_positions = get_points(r.at("positions"), "robots.positions");
      s.robot_count = static_cast<int>(s.initial_positions.size());
    }
    if (r.contains("count")) {
      const std::uint64_t n = get_uint(r.at("count"), "robots.count");
      if (n > 100000) throw ConfigError("'robots.count' is too large");
      s.robot_count = static_cast<int>(n);
    }
    s.robot_radius = get_number(r, "robots", "radius", s.robot_radius);
    if (r.contains("spawn")) s.spawn = get_box(r.at("spawn"), "robots.spawn");
    if (r.contains("neighbor_cutoff")) s.neighbor_cutoff = get_number(r, "robots", "neighbor_cutoff", 0.0);
  }

  if (doc.contains("sensor")) {
    const json& r = doc.at("sensor");
    check_keys(r, "sensor", {"range"});
    s.sensor_range = get_number(r, "sensor", "range", s.sensor_range);
  }

  if (doc.contains("control")) {
    const json& c = doc.at("control");
    check_keys(c, "control",
               {"u_max", "dt", "converge_tol", "t_max", "detect_radius", "stall_radius", "deadlock_window",
                "stop_on_deadlock"});
    s.u_max = get_number(c, "control", "u_max", s.u_max);
    s.dt = get_number(c, "control", "dt", s.dt);
    s.converge_tol = get_number(c, "control", "converge_tol", s.converge_tol);
    s.t_max = get_number(c, "control", "t_max", s.t_max);
    s.detect_radius = get_number(c, "control", "detect_radius", s.detect_radius);
    s.stall_radius = get_number(c, "control", "stall_radius", s.stall_radius);
    if (c.contains("deadlock_window")) {
      const std::uint64_t w = get_uint(c.at("deadlock_window"), "control.deadlock_window");
      if (w > 1000000) throw ConfigError("'control.deadlock_window' is too large");
      s.deadlock_window = static_cast<int>(w);
    }
    s.stop_on_deadlock = get_bool(c, "control", "stop_on_deadlock", s.stop_on_deadlock);
  }

  if (!doc.contains("density")) throw ConfigError("missing section 'density'");
  {
    const json& d = doc.at("density");
    check_keys(d, "density", {"gamma", "peaks"});
    s.gamma = get_number(d, "density", "gamma", s.gamma);
    if (!d.contains("peaks") || !d.at("peaks").is_array()) throw ConfigError("'density.peaks' must be an array");
    const json& peaks = d.at("peaks");
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      const std::string name = "density.peaks[" + std::to_string(i) + "]";
      const json& p = peaks[i];
      check_keys(p, name, {"center", "weight", "sigma"});
      if (!p.contains("center")) throw ConfigError("'" + name + "' needs a center");
      GmmComponent g;
      g.center = get_vec(p.at("center"), name + ".center");
      g.weight = get_number(p, name, "weight", g.weight);
      g.sigma = get_number(p, name, "sigma", g.sigma);
      s.peaks.push_back(g);
    }
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"trajectory", "plot_plane"});
    file.output.trajectory = get_bool(o, "output", "trajectory", true);
    if (o.contains("plot_plane")) file.output.plane = parse_plane(get_string(o.at("plot_plane"), "output.plot_plane"));
  }
  s.record_trajectory = file.output.trajectory;

  s.validate();
  return file;
}

ScenarioFile load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

json scenario_to_json(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  json doc;
  doc["seed"] = s.seed;
  doc["policy"] = std::string(to_string(s.policy));

  json ws = box_json(s.workspace);
  ws["resolution"] = s.resolution;
  switch (file.cloud.kind) {
    case CloudSource::Kind::file: {
      json c{{"path", file.cloud.path.generic_string()}, {"format", std::string(to_string(file.cloud.format))}};
      ws["cloud"] = c;
      break;
    }
    case CloudSource::Kind::generator:
      ws["cloud"] = {{"generator", file.cloud.generator},
                     {"density", file.cloud.density},
                     {"seed", file.cloud.generator_seed}};
      break;
    case CloudSource::Kind::none:
    case CloudSource::Kind::inline_points:
      if (!s.obstacles.empty()) {
        json pts = json::array();
        for (const Point3& p : s.obstacles) pts.push_back(vec_json(p));
        ws["cloud"] = {{"points", pts}};
      }
      break;
  }
  doc["workspace"] = ws;

  json robots{{"count", s.robot_count}, {"radius", s.robot_radius}};
  if (!s.initial_positions.empty()) {
    json pts = json::array();
    for (const Point3& p : s.initial_positions) pts.push_back(vec_json(p));
    robots["positions"] = pts;
  }
  if (s.spawn) robots["spawn"] = box_json(*s.spawn);
  if (s.neighbor_cutoff) robots["neighbor_cutoff"] = *s.neighbor_cutoff;
  doc["robots"] = robots;

  doc["sensor"] = {{"range", s.sensor_range}};
  doc["control"] = {{"u_max", s.u_max},
                    {"dt", s.dt},
                    {"converge_tol", s.converge_tol},
                    {"t_max", s.t_max},
                    {"detect_radius", s.detect_radius},
                    {"stall_radius", s.stall_radius},
                    {"deadlock_window", s.deadlock_window},
                    {"stop_on_deadlock", s.stop_on_deadlock}};
  json peaks = json::array();
  for (const GmmComponent& g : s.peaks) {
    peaks.push_back({{"center", vec_json(g.center)}, {"weight", g.weight}, {"sigma", g.sigma}});
  }
  doc["density"] = {{"gamma", s.gamma}, {"peaks", peaks}};
  doc["output"] = {{"trajectory", file.output.trajectory}, {"plot_plane", std::string(to_string(file.output.plane))}};
  return doc;
}

void save_scenario(const ScenarioFile& file, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << scenario_to_json(file).dump(2) << '\n';
}

}  // namespace cover::cli
