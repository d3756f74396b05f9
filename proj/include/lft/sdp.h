#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lft/lmi.h"

namespace lft {

struct SolverOptions {
  /// Cap on path-following (centering) steps.
  int max_iter = 500;
  /// Smallest margin accepted as strict feasibility.
  double margin_tol = 1e-7;
  /// Bound on the trace of each positive variable (and on the squared norm of
  /// every other group) that compactifies homogeneous problems.
  double trace_cap = 1e4;
  /// Per-step log on standard error.
  bool verbose = false;
};

enum class FeasibilityStatus { kFeasible, kMarginBelowThreshold };

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::kMarginBelowThreshold;
  /// One value per coordinate of the problem, fixed coordinates included.
  Eigen::VectorXd assignment;
  /// EvaluateMargin at `assignment`.
  double margin = 0;
  /// Label of the strict constraint attaining the margin.
  std::string binding_constraint;
  int iterations = 0;
  double runtime_seconds = 0;

  bool feasible() const { return status == FeasibilityStatus::kFeasible; }
};

/// min over strict constraints of -lambda_max(F_i(v)). Nonstrict constraints
/// do not enter. Throws std::invalid_argument when `v` is too short.
double EvaluateMargin(const LmiProblem& problem, const Eigen::VectorXd& v);

/// -lambda_max(F_i(v)) for every constraint, in problem order.
std::vector<double> ConstraintMargins(const LmiProblem& problem,
                                      const Eigen::VectorXd& v);

/// Maximizes the margin t with F_i(v) <= -t I over all (strict) constraints by
/// a log-det barrier path-following method. The verdict is decided on the
/// independently recomputed margin. Throws std::invalid_argument for problems
/// with nonstrict constraints or no strict constraint, and SolverTimeoutError
/// when the step cap is hit below margin_tol.
FeasibilityResult SolveFeasibility(const LmiProblem& problem,
                                   const SolverOptions& options = {});

struct LinearObjectiveResult {
  Eigen::VectorXd assignment;
  double objective = 0;
  int iterations = 0;
};

/// Minimizes c^T v subject to F_i(v) <= -margin I (strict constraints),
/// F_i(v) <= 0 (nonstrict) and the trace caps, starting from a strictly
/// interior `start`. Throws std::invalid_argument if `start` is not interior.
LinearObjectiveResult MinimizeLinear(const LmiProblem& problem,
                                     const Eigen::VectorXd& c, double margin,
                                     const Eigen::VectorXd& start,
                                     const SolverOptions& options = {});

}  // namespace lft
