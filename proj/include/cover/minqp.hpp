#pragma once

#include <vector>

#include "cover/geometry.hpp"

namespace cover {

/// No hyperplane strictly separates the anchor from the targets.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// min |a|^2  s.t.  (q - anchor) . a >= 1  for every target q.
struct SeparatorProblem {
  Point3 anchor;
  std::vector<Point3> targets;
};

struct Separator {
  Vec3 a;
  /// Tight offset: min over targets of a . q.
  double b = 0.0;
  /// 1 / |a|, the distance from the anchor to the convex hull of the targets.
  double margin = 0.0;
};

enum class SolveMethod {
  automatic,   ///< closed form for one target, active set otherwise
  active_set,  ///< always run the iterative solver
};

/// Minimum-norm separating hyperplane. Throws InfeasibleError when the anchor
/// lies inside (or on) the convex hull of the targets.
Separator solve_min_norm(const SeparatorProblem& problem, SolveMethod method = SolveMethod::automatic);

/// KKT check for a candidate: primal feasibility, and the candidate `a` must be
/// a nonnegative combination of the active constraint gradients (tol 1e-6).
bool verify_kkt(const SeparatorProblem& problem, const Separator& candidate);

}  // namespace cover
