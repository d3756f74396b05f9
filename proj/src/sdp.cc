#include "lft/sdp.h"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTauGrowth = 20.0;
constexpr int kMaxNewton = 200;
constexpr double kNewtonTol = 1e-10;

// S(z) = -(c0 + sum_j z_j F_j) must stay positive definite.
struct BarrierLmi {
  MatrixXd c0;
  std::vector<std::pair<int, MatrixXd>> terms;
};

// b - a^T z > 0.
struct LinearCap {
  std::vector<std::pair<int, double>> a;
  double b = 0;
};

// b - sum_{i in idx} z_i^2 > 0.
struct NormCap {
  std::vector<int> idx;
  double b = 0;
};

class Barrier {
 public:
  explicit Barrier(int nz) : nz_(nz), obj_(VectorXd::Zero(nz)) {}

  int nz() const { return nz_; }
  VectorXd& objective() { return obj_; }
  std::vector<BarrierLmi>& lmis() { return lmis_; }
  std::vector<LinearCap>& linear_caps() { return linear_; }
  std::vector<NormCap>& norm_caps() { return norm_; }

  double theta() const {
    double th = static_cast<double>(linear_.size() + norm_.size());
    for (const auto& l : lmis_) th += static_cast<double>(l.c0.rows());
    return th;
  }

  // Barrier value, +inf outside the domain.
  double Value(const VectorXd& z) const {
    double phi = 0;
    for (const auto& l : lmis_) {
      Eigen::LLT<MatrixXd> llt(Slack(l, z));
      if (llt.info() != Eigen::Success) return kInf;
      const auto d = llt.matrixLLT().diagonal();
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0)) return kInf;
        phi -= 2.0 * std::log(d(i));
      }
    }
    for (const auto& c : linear_) {
      const double s = LinearSlack(c, z);
      if (!(s > 0)) return kInf;
      phi -= std::log(s);
    }
    for (const auto& c : norm_) {
      const double s = NormSlack(c, z);
      if (!(s > 0)) return kInf;
      phi -= std::log(s);
    }
    return phi;
  }

  // Gradient and Hessian of the barrier; z must be interior.
  void Derivatives(const VectorXd& z, VectorXd& g, MatrixXd& h) const {
    g = VectorXd::Zero(nz_);
    h = MatrixXd::Zero(nz_, nz_);
    for (const auto& l : lmis_) {
      Eigen::LLT<MatrixXd> llt(Slack(l, z));
      const auto lower = llt.matrixL();
      std::vector<MatrixXd> gs;
      gs.reserve(l.terms.size());
      for (const auto& [j, f] : l.terms) {
        MatrixXd a = lower.solve(f);
        MatrixXd gj = lower.solve(a.transpose());
        g(j) += gj.trace();
        gs.push_back(std::move(gj));
      }
      for (size_t p = 0; p < gs.size(); ++p) {
        const int jp = l.terms[p].first;
        for (size_t q = p; q < gs.size(); ++q) {
          const int jq = l.terms[q].first;
          const double v = gs[p].cwiseProduct(gs[q]).sum();
          h(jp, jq) += v;
          if (q != p) h(jq, jp) += v;
        }
      }
    }
    for (const auto& c : linear_) {
      const double s = LinearSlack(c, z);
      for (const auto& [i, ai] : c.a) {
        g(i) += ai / s;
        for (const auto& [j, aj] : c.a) h(i, j) += ai * aj / (s * s);
      }
    }
    for (const auto& c : norm_) {
      const double s = NormSlack(c, z);
      for (int i : c.idx) {
        g(i) += 2.0 * z(i) / s;
        h(i, i) += 2.0 / s;
        for (int j : c.idx) h(i, j) += 4.0 * z(i) * z(j) / (s * s);
      }
    }
  }

  // Damped Newton centering of tau * obj^T z + phi(z). Returns Newton steps.
  int Center(VectorXd& z, double tau) const {
    int steps = 0;
    VectorXd g;
    MatrixXd h;
    double f = tau * obj_.dot(z) + Value(z);
    for (; steps < kMaxNewton; ++steps) {
      Derivatives(z, g, h);
      g += tau * obj_;
      Eigen::LDLT<MatrixXd> ldlt(h);
      VectorXd dz = -ldlt.solve(g);
      if (ldlt.info() != Eigen::Success || !dz.allFinite()) {
        const double reg = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
        dz = -(h + reg * MatrixXd::Identity(nz_, nz_)).ldlt().solve(g);
      }
      const double decrement = -g.dot(dz);
      if (!(decrement > 2 * kNewtonTol)) break;
      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-14) {
        const VectorXd trial = z + alpha * dz;
        const double ft = tau * obj_.dot(trial) + Value(trial);
        if (ft <= f - 0.25 * alpha * decrement) {
          z = trial;
          f = ft;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }
    return steps;
  }

 private:
  MatrixXd Slack(const BarrierLmi& l, const VectorXd& z) const {
    MatrixXd s = -l.c0;
    for (const auto& [j, f] : l.terms) s.noalias() -= z(j) * f;
    return s;
  }
  static double LinearSlack(const LinearCap& c, const VectorXd& z) {
    double s = c.b;
    for (const auto& [i, a] : c.a) s -= a * z(i);
    return s;
  }
  static double NormSlack(const NormCap& c, const VectorXd& z) {
    double s = c.b;
    for (int i : c.idx) s -= z(i) * z(i);
    return s;
  }

  int nz_;
  VectorXd obj_;
  std::vector<BarrierLmi> lmis_;
  std::vector<LinearCap> linear_;
  std::vector<NormCap> norm_;
};

// Coordinates of the problem that the solver moves, and their z positions.
struct Layout {
  std::vector<int> free;  // z index -> problem coordinate
  std::vector<int> z_of;  // problem coordinate -> z index, -1 if fixed
};

Layout MakeLayout(const LmiProblem& problem) {
  Layout lay;
  lay.z_of.assign(problem.num_variables(), -1);
  for (int i = 0; i < problem.num_variables(); ++i) {
    if (problem.fixed().count(i)) continue;
    lay.z_of[i] = static_cast<int>(lay.free.size());
    lay.free.push_back(i);
  }
  return lay;
}

VectorXd Expand(const LmiProblem& problem, const Layout& lay,
                const VectorXd& z) {
  VectorXd v = VectorXd::Zero(problem.num_variables());
  for (size_t k = 0; k < lay.free.size(); ++k) v(lay.free[k]) = z(k);
  for (const auto& [i, val] : problem.fixed()) v(i) = val;
  return v;
}

// Folds fixed coordinates into the constant and maps terms to z indices.
BarrierLmi Reduce(const LmiProblem& problem, const Layout& lay,
                  const AffineMatrixExpr& e) {
  BarrierLmi out{e.constant, {}};
  for (const auto& [i, c] : e.terms) {
    if (lay.z_of[i] < 0) {
      out.c0 += problem.fixed().at(i) * c;
    } else {
      out.terms.emplace_back(lay.z_of[i], c);
    }
  }
  return out;
}

void AddCaps(const LmiProblem& problem, const Layout& lay, double cap,
             Barrier& barrier) {
  for (const auto& g : problem.groups()) {
    const bool positive = problem.is_positive(g.name);
    if (positive && g.kind == VariableKind::kStructured) {
      LinearCap c{{}, cap};
      int idx = g.offset;
      for (const auto& b : g.structure.blocks()) {
        for (int i = 0; i < b.n; ++i) {
          for (int j = i; j < b.n; ++j, ++idx) {
            if (i != j) continue;
            if (lay.z_of[idx] < 0) {
              c.b -= b.m * problem.fixed().at(idx);
            } else {
              c.a.emplace_back(lay.z_of[idx], static_cast<double>(b.m));
            }
          }
        }
      }
      if (!c.a.empty()) barrier.linear_caps().push_back(std::move(c));
    } else if (positive) {
      if (lay.z_of[g.offset] >= 0) {
        barrier.linear_caps().push_back({{{lay.z_of[g.offset], 1.0}}, cap});
      }
    } else {
      NormCap c{{}, cap * cap};
      for (int i = g.offset; i < g.offset + g.size; ++i) {
        if (lay.z_of[i] < 0) {
          c.b -= problem.fixed().at(i) * problem.fixed().at(i);
        } else {
          c.idx.push_back(lay.z_of[i]);
        }
      }
      if (!c.idx.empty()) barrier.norm_caps().push_back(std::move(c));
    }
  }
}

VectorXd DefaultStart(const LmiProblem& problem, double cap) {
  VectorXd v = VectorXd::Zero(problem.num_variables());
  for (const auto& g : problem.groups()) {
    if (!problem.is_positive(g.name)) continue;
    if (g.kind == VariableKind::kScalar) {
      v(g.offset) = 1.0;
      continue;
    }
    const int dim = g.structure.total_dim();
    const double scale = dim > 0 ? std::min(1.0, 0.5 * cap / dim) : 1.0;
    int idx = g.offset;
    for (const auto& b : g.structure.blocks()) {
      for (int i = 0; i < b.n; ++i) {
        for (int j = i; j < b.n; ++j, ++idx) {
          if (i == j) v(idx) = scale;
        }
      }
    }
  }
  for (const auto& [i, val] : problem.fixed()) v(i) = val;
  return v;
}

// Label of the strict constraint attaining the margin; among near-ties an
// inequality is preferred over a variable positivity constraint.
std::string BindingConstraint(const LmiProblem& problem, const VectorXd& v) {
  const auto margins = ConstraintMargins(problem, v);
  double best = kInf;
  for (size_t i = 0; i < margins.size(); ++i) {
    if (problem.constraints()[i].strict) best = std::min(best, margins[i]);
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(best));
  std::string label;
  for (size_t i = 0; i < margins.size(); ++i) {
    const auto& c = problem.constraints()[i];
    if (!c.strict || margins[i] > best + slack) continue;
    const bool positivity = c.label.size() >= 2 &&
                            c.label.compare(c.label.size() - 2, 2, ">0") == 0;
    if (label.empty() || !positivity) label = c.label;
    if (!positivity) break;
  }
  return label;
}

}  // namespace

std::vector<double> ConstraintMargins(const LmiProblem& problem,
                                      const VectorXd& v) {
  if (v.size() < problem.num_variables()) {
    throw std::invalid_argument("assignment has " + std::to_string(v.size()) +
                                " coordinates, problem needs " +
                                std::to_string(problem.num_variables()));
  }
  std::vector<double> out;
  out.reserve(problem.constraints().size());
  for (const auto& c : problem.constraints()) {
    out.push_back(-MaxEigenvalue(c.expr.Evaluate(v)));
  }
  return out;
}

double EvaluateMargin(const LmiProblem& problem, const VectorXd& v) {
  const auto margins = ConstraintMargins(problem, v);
  double m = kInf;
  for (size_t i = 0; i < margins.size(); ++i) {
    if (problem.constraints()[i].strict) m = std::min(m, margins[i]);
  }
  return m;
}

FeasibilityResult SolveFeasibility(const LmiProblem& problem,
                                   const SolverOptions& options) {
  const auto start_time = std::chrono::steady_clock::now();
  bool any_strict = false;
  for (const auto& c : problem.constraints()) {
    if (!c.strict) {
      throw std::invalid_argument(
          "margin maximization takes strict "
          "constraints only; " +
          c.label + " is nonstrict");
    }
    any_strict = true;
  }
  if (!any_strict) {
    throw std::invalid_argument("problem has no strict constraint");
  }

  const Layout lay = MakeLayout(problem);
  const int nv = static_cast<int>(lay.free.size());
  const int t_index = nv;
  Barrier barrier(nv + 1);
  barrier.objective()(t_index) = -1.0;
  for (const auto& c : problem.constraints()) {
    BarrierLmi l = Reduce(problem, lay, c.expr);
    l.terms.emplace_back(t_index, MatrixXd::Identity(l.c0.rows(), l.c0.cols()));
    barrier.lmis().push_back(std::move(l));
  }
  AddCaps(problem, lay, options.trace_cap, barrier);

  const VectorXd v0 = DefaultStart(problem, options.trace_cap);
  VectorXd z(nv + 1);
  for (int k = 0; k < nv; ++k) z(k) = v0(lay.free[k]);
  z(t_index) = EvaluateMargin(problem, v0) - 1.0;
  if (!std::isfinite(barrier.Value(z))) {
    throw std::invalid_argument("default start violates the variable caps");
  }

  const double theta = barrier.theta();
  FeasibilityResult result;
  double tau = 1.0;
  bool converged = false;
  int outer = 0;
  for (; outer < options.max_iter; ++outer) {
    result.iterations += barrier.Center(z, tau);
    const double t = z(t_index);
    const double gap = theta / tau;
    if (options.verbose) {
      std::cerr << "sdp: step " << outer << " tau " << tau << " t " << t
                << " gap " << gap << " newton " << result.iterations << "\n";
    }
    if (t >= options.margin_tol && gap <= 1e-6 * t) {
      converged = true;
      break;
    }
    if (t + 2.0 * gap < options.margin_tol && gap < 1e-3 * options.margin_tol) {
      converged = true;
      break;
    }
    if (gap < 1e-13) {
      converged = true;
      break;
    }
    tau *= kTauGrowth;
  }

  result.assignment = Expand(problem, lay, z.head(nv));
  result.margin = EvaluateMargin(problem, result.assignment);
  result.binding_constraint = BindingConstraint(problem, result.assignment);
  result.status = result.margin >= options.margin_tol
                      ? FeasibilityStatus::kFeasible
                      : FeasibilityStatus::kMarginBelowThreshold;
  result.runtime_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_time)
                               .count();
  if (!converged && !result.feasible()) {
    throw SolverTimeoutError(
        "step cap reached with margin " + std::to_string(result.margin),
        result.margin);
  }
  return result;
}

LinearObjectiveResult MinimizeLinear(const LmiProblem& problem,
                                     const VectorXd& c, double margin,
                                     const VectorXd& start,
                                     const SolverOptions& options) {
  if (c.size() != problem.num_variables() ||
      start.size() != problem.num_variables()) {
    throw std::invalid_argument(
        "objective and start must cover every "
        "coordinate");
  }
  const Layout lay = MakeLayout(problem);
  const int nv = static_cast<int>(lay.free.size());
  Barrier barrier(nv);
  for (int k = 0; k < nv; ++k) barrier.objective()(k) = c(lay.free[k]);
  for (const auto& con : problem.constraints()) {
    BarrierLmi l = Reduce(problem, lay, con.expr);
    if (con.strict)
      l.c0 += margin * MatrixXd::Identity(l.c0.rows(), l.c0.cols());
    barrier.lmis().push_back(std::move(l));
  }
  AddCaps(problem, lay, options.trace_cap, barrier);

  VectorXd z(nv);
  for (int k = 0; k < nv; ++k) z(k) = start(lay.free[k]);
  if (!std::isfinite(barrier.Value(z))) {
    throw std::invalid_argument("start point is not strictly interior");
  }
  const double theta = barrier.theta();
  LinearObjectiveResult out;
  double tau = 1.0;
  for (int outer = 0; outer < options.max_iter; ++outer) {
    out.iterations += barrier.Center(z, tau);
    if (options.verbose) {
      std::cerr << "sdp: min step " << outer << " tau " << tau << " obj "
                << barrier.objective().dot(z) << "\n";
    }
    if (theta / tau < 1e-9) break;
    tau *= kTauGrowth;
  }
  out.assignment = Expand(problem, lay, z);
  out.objective = c.dot(out.assignment);
  return out;
}

}  // namespace lft
