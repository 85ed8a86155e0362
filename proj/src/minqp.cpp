#include "cover/minqp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cover {

namespace {

// Solves the n x n system m * x = rhs in place (partial pivoting). Returns
// false when a pivot falls below `tiny`.
template <std::size_t N>
bool solve_dense(std::array<std::array<double, N>, N>& m, std::array<double, N>& rhs, std::size_t n,
                 double tiny) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) <= tiny) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m[i][c] * rhs[c];
    rhs[i] = acc / m[i][i];
  }
  return true;
}

// Minimum-norm point of the convex hull of `pts` (Wolfe's active-set method
// on the simplex-constrained dual). Returns the point.
Vec3 min_norm_point(const std::vector<Vec3>& pts) {
  const int m = static_cast<int>(pts.size());
  double scale2 = 0.0;
  int start = 0;
  for (int i = 0; i < m; ++i) {
    const double n2 = squared_norm(pts[i]);
    scale2 = std::max(scale2, n2);
    if (n2 < squared_norm(pts[start])) start = i;
  }
  const double tol = 1e-13 * scale2;
  const double tiny = 1e-12;

  std::vector<int> active{start};
  std::vector<double> lambda{1.0};
  Vec3 x = pts[start];

  auto combine = [&](const std::vector<double>& w) {
    Vec3 out;
    for (std::size_t k = 0; k < active.size(); ++k) out += pts[active[k]] * w[k];
    return out;
  };

  const int max_iter = 50 + 10 * m;
  for (int iter = 0; iter < max_iter; ++iter) {
    int j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double v = dot(x, pts[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    if (squared_norm(x) - best <= tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    if (active.size() == 4) break;  // x is already interior to a full simplex
    active.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor < 8; ++minor) {
      // Affine minimizer: x = s0 + sum beta_i (s_i - s0).
      const std::size_t k = active.size() - 1;
      std::array<std::array<double, 3>, 3> gram{};
      std::array<double, 3> rhs{};
      const Vec3& s0 = pts[active[0]];
      for (std::size_t r = 0; r < k; ++r) {
        const Vec3 er = pts[active[r + 1]] - s0;
        rhs[r] = -dot(er, s0);
        for (std::size_t c = 0; c < k; ++c) gram[r][c] = dot(er, pts[active[c + 1]] - s0);
      }
      std::vector<double> alpha(active.size(), 0.0);
      if (!solve_dense(gram, rhs, k, tiny * std::max(scale2, 1e-300))) {
        // Affinely dependent set: drop the newcomer and stop.
        active.pop_back();
        lambda.pop_back();
        return combine(lambda);
      }
      double sum = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        alpha[r + 1] = rhs[r];
        sum += rhs[r];
      }
      alpha[0] = 1.0 - sum;

      if (std::all_of(alpha.begin(), alpha.end(), [&](double a) { return a > tiny; })) {
        lambda = alpha;
        x = combine(lambda);
        break;
      }
      double theta = 1.0;
      for (std::size_t r = 0; r < alpha.size(); ++r) {
        if (alpha[r] <= tiny && lambda[r] - alpha[r] > 0.0) {
          theta = std::min(theta, lambda[r] / (lambda[r] - alpha[r]));
        }
      }
      for (std::size_t r = 0; r < alpha.size(); ++r) lambda[r] = theta * alpha[r] + (1.0 - theta) * lambda[r];
      std::size_t w = 0;
      for (std::size_t r = 0; r < active.size(); ++r) {
        if (lambda[r] > tiny) {
          active[w] = active[r];
          lambda[w] = lambda[r];
          ++w;
        }
      }
      active.resize(w);
      lambda.resize(w);
      double total = 0.0;
      for (double l : lambda) total += l;
      for (double& l : lambda) l /= total;
      x = combine(lambda);
      if (active.size() <= 1) break;
    }
  }
  return x;
}

// Nonnegative least squares (Lawson-Hanson) for min |y - A lambda|,
// lambda >= 0, where A has 3 rows given as columns `cols`. Returns residual.
double nnls_residual(const std::vector<Vec3>& cols, const Vec3& y) {
  const std::size_t n = cols.size();
  std::vector<double> lambda(n, 0.0);
  std::vector<bool> in_p(n, false);
  double scale = norm(y);
  for (const auto& c : cols) scale = std::max(scale, norm(c));
  const double tol = 1e-12 * scale * scale;

  auto residual = [&]() {
    Vec3 r = y;
    for (std::size_t j = 0; j < n; ++j) r -= cols[j] * lambda[j];
    return r;
  };

  // Least squares restricted to the passive set, with a tiny ridge so that
  // dependent columns do not break the solve.
  auto solve_passive = [&](std::vector<double>& s) {
    std::vector<std::size_t> p;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_p[j]) p.push_back(j);
    }
    const std::size_t k = p.size();
    std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) m[r][c] = dot(cols[p[r]], cols[p[c]]);
      m[r][r] += 1e-14 * scale * scale;
      m[r][k] = dot(cols[p[r]], y);
    }
    for (std::size_t col = 0; col < k; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < k; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      }
      std::swap(m[piv], m[col]);
      for (std::size_t r = col + 1; r < k; ++r) {
        const double f = m[r][col] / m[col][col];
        for (std::size_t c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
      }
    }
    std::fill(s.begin(), s.end(), 0.0);
    std::vector<double> sol(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double acc = m[i][k];
      for (std::size_t c = i + 1; c < k; ++c) acc -= m[i][c] * sol[c];
      sol[i] = acc / m[i][i];
    }
    for (std::size_t r = 0; r < k; ++r) s[p[r]] = sol[r];
  };

  std::vector<double> s(n, 0.0);
  for (std::size_t outer = 0; outer < 3 * n + 10; ++outer) {
    const Vec3 r = residual();
    std::size_t t = n;
    double best = tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_p[j]) continue;
      const double w = dot(cols[j], r);
      if (w > best) {
        best = w;
        t = j;
      }
    }
    if (t == n) break;
    in_p[t] = true;
    for (std::size_t inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(s);
      bool positive = true;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_p[j] && s[j] <= 0.0) positive = false;
      }
      if (positive) {
        lambda = s;
        break;
      }
      double alpha = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_p[j] && s[j] <= 0.0) alpha = std::min(alpha, lambda[j] / (lambda[j] - s[j]));
      }
      for (std::size_t j = 0; j < n; ++j) {
        lambda[j] += alpha * (s[j] - lambda[j]);
        if (in_p[j] && lambda[j] <= 1e-15) {
          in_p[j] = false;
          lambda[j] = 0.0;
        }
      }
    }
  }
  return norm(residual());
}

}  // namespace

Separator solve_min_norm(const SeparatorProblem& problem, SolveMethod method) {
  if (problem.targets.empty()) throw GeometryError("separator problem has no targets");
  std::vector<Vec3> rel;
  rel.reserve(problem.targets.size());
  double max_len = 0.0;
  for (const Point3& q : problem.targets) {
    const Vec3 g = q - problem.anchor;
    const double len = norm(g);
    if (len < 1e-9) throw InfeasibleError("no separating hyperplane");
    max_len = std::max(max_len, len);
    rel.push_back(g);
  }

  Vec3 closest;
  if (rel.size() == 1 && method == SolveMethod::automatic) {
    closest = rel.front();
  } else {
    closest = min_norm_point(rel);
  }
  const double dist = norm(closest);
  if (dist <= 1e-9 * std::max(1.0, max_len)) throw InfeasibleError("no separating hyperplane");

  Separator sep;
  sep.a = closest / (dist * dist);
  sep.margin = dist;
  sep.b = std::numeric_limits<double>::infinity();
  for (const Point3& q : problem.targets) sep.b = std::min(sep.b, dot(sep.a, q));
  return sep;
}

bool verify_kkt(const SeparatorProblem& problem, const Separator& candidate) {
  constexpr double kTol = 1e-6;
  const Vec3& a = candidate.a;
  const double a_len = norm(a);
  if (!(a_len > 0.0) || !is_finite(a)) return false;
  std::vector<Vec3> active;
  for (const Point3& q : problem.targets) {
    const double slack = dot(q - problem.anchor, a);
    if (slack < 1.0 - 1e-7) return false;
    if (slack <= 1.0 + kTol) active.push_back(q - problem.anchor);
  }
  if (active.empty()) return false;
  return nnls_residual(active, a) <= kTol * std::max(1.0, a_len);
}

}  // namespace cover
