#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cover/cli.hpp"

namespace cover::cli {

namespace {

constexpr double kCanvas = 800.0;
constexpr double kMargin = 20.0;
constexpr int kSamples = 121;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::vector<Segment> marching_squares(const std::vector<double>& values, int nx, int ny, double level) {
  std::vector<Segment> out;
  auto at = [&](int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      // Corners counterclockwise from the lower left.
      const double v[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      const double cx[4] = {0, 1, 1, 0};
      const double cy[4] = {0, 0, 1, 1};
      int code = 0;
      for (int k = 0; k < 4; ++k) code |= (v[k] >= level) << k;
      if (code == 0 || code == 15) continue;
      // Edge e joins corner e and corner e+1.
      auto cross = [&](int e, double& x, double& y) {
        const int a = e, b = (e + 1) % 4;
        const double t = (level - v[a]) / (v[b] - v[a]);
        x = i + cx[a] + t * (cx[b] - cx[a]);
        y = j + cy[a] + t * (cy[b] - cy[a]);
      };
      auto emit = [&](int e0, int e1) {
        Segment s{};
        cross(e0, s.x0, s.y0);
        cross(e1, s.x1, s.y1);
        out.push_back(s);
      };
      const bool center_high = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= level;
      switch (code) {
        case 1: case 14: emit(3, 0); break;
        case 2: case 13: emit(0, 1); break;
        case 3: case 12: emit(3, 1); break;
        case 4: case 11: emit(1, 2); break;
        case 6: case 9: emit(0, 2); break;
        case 7: case 8: emit(3, 2); break;
        case 5:
          if (center_high) { emit(0, 1); emit(2, 3); } else { emit(3, 0); emit(1, 2); }
          break;
        case 10:
          if (center_high) { emit(3, 0); emit(1, 2); } else { emit(0, 1); emit(2, 3); }
          break;
        default:
          break;
      }
    }
  }
  return out;
}

std::string render_svg(const PlotInput& input, PlotPlane plane) {
  const Box& ws = input.workspace;
  const bool xy = plane == PlotPlane::xy;
  auto u_of = [](const Point3& p) { return p.x; };
  auto v_of = [xy](const Point3& p) { return xy ? p.y : p.z; };
  const double u0 = ws.min.x, u1 = ws.max.x;
  const double v0 = xy ? ws.min.y : ws.min.z, v1 = xy ? ws.max.y : ws.max.z;
  const double scale = (kCanvas - 2 * kMargin) / std::max(u1 - u0, v1 - v0);
  const double width = 2 * kMargin + (u1 - u0) * scale;
  const double height = 2 * kMargin + (v1 - v0) * scale;
  auto sx = [&](double u) { return kMargin + (u - u0) * scale; };
  auto sy = [&](double v) { return height - kMargin - (v - v0) * scale; };

  // The slice through the trajectories (or the middle of the workspace).
  double fixed = xy ? 0.5 * (ws.min.z + ws.max.z) : 0.5 * (ws.min.y + ws.max.y);
  if (!input.trajectory.empty()) {
    std::vector<double> w;
    for (const TrajectoryRow& r : input.trajectory) w.push_back(xy ? r.position.z : r.position.y);
    std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
    fixed = w[w.size() / 2];
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
  svg << "<rect class=\"workspace\" x=\"" << num(sx(u0)) << "\" y=\"" << num(sy(v1)) << "\" width=\""
      << num((u1 - u0) * scale) << "\" height=\"" << num((v1 - v0) * scale)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  if (!input.peaks.empty()) {
    const GmmDensity density(input.peaks);
    std::vector<double> values(static_cast<std::size_t>(kSamples) * kSamples);
    double peak = 0.0;
    for (int j = 0; j < kSamples; ++j) {
      for (int i = 0; i < kSamples; ++i) {
        const double u = u0 + (u1 - u0) * i / (kSamples - 1);
        const double v = v0 + (v1 - v0) * j / (kSamples - 1);
        const Point3 p = xy ? Point3{u, v, fixed} : Point3{u, fixed, v};
        const double d = density(p);
        values[static_cast<std::size_t>(j) * kSamples + i] = d;
        peak = std::max(peak, d);
      }
    }
    const char* colors[] = {"#9ecae1", "#4292c6", "#08519c"};
    const double fractions[] = {0.25, 0.5, 0.75};
    for (int k = 0; k < 3; ++k) {
      const double level = fractions[k] * peak;
      svg << "<path class=\"contour\" data-level=\"" << fractions[k] << "\" fill=\"none\" stroke=\"" << colors[k]
          << "\" d=\"";
      for (const Segment& s : marching_squares(values, kSamples, kSamples, level)) {
        auto pu = [&](double i) { return sx(u0 + (u1 - u0) * i / (kSamples - 1)); };
        auto pv = [&](double j) { return sy(v0 + (v1 - v0) * j / (kSamples - 1)); };
        svg << 'M' << num(pu(s.x0)) << ' ' << num(pv(s.y0)) << 'L' << num(pu(s.x1)) << ' ' << num(pv(s.y1));
      }
      svg << "\"/>\n";
    }
  }

  // One dot per occupied half pixel keeps large clouds small.
  std::set<std::pair<long, long>> drawn;
  for (const Point3& p : input.obstacles) {
    const double x = sx(u_of(p)), y = sy(v_of(p));
    if (!drawn.insert({std::lround(2 * x), std::lround(2 * y)}).second) continue;
    svg << "<circle class=\"obstacle\" cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"1\" fill=\"#444\"/>\n";
  }

  for (const GmmComponent& g : input.peaks) {
    svg << "<circle class=\"peak\" cx=\"" << num(sx(u_of(g.center))) << "\" cy=\"" << num(sy(v_of(g.center)))
        << "\" r=\"5\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }

  std::map<int, std::vector<const TrajectoryRow*>> by_robot;
  for (const TrajectoryRow& r : input.trajectory) by_robot[r.robot_id].push_back(&r);
  const char* palette[] = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};
  for (auto& [id, rows] : by_robot) {
    std::stable_sort(rows.begin(), rows.end(), [](const TrajectoryRow* a, const TrajectoryRow* b) { return a->t < b->t; });
    svg << "<polyline class=\"trajectory\" data-robot=\"" << id << "\" fill=\"none\" stroke=\""
        << palette[static_cast<std::size_t>(id) % 8] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (k) svg << ' ';
      svg << num(sx(u_of(rows[k]->position))) << ',' << num(sy(v_of(rows[k]->position)));
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const PlotInput& input, PlotPlane plane, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << render_svg(input, plane);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace cover::cli
