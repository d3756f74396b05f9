#include "lft/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Short form of a margin for diagnostics, e.g. "-3.2e-13".
std::string FormatNumber(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

MatrixXd Sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd BlockDiag(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

double SpectralNorm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

// ||diag(Q^{-1}, I) M diag(Q, I)|| with Q = X^{1/2}; NaN unless X > 0.
double ScaledNorm(const MatrixXd& m, const CommutantElement& x) {
  if (!(x.MinEigenvalue() > 0)) return std::nan("");
  const int n = x.structure().total_dim();
  const MatrixXd q = x.SquareRoot().Assemble();
  const MatrixXd qi = x.SquareRoot().Inverse().Assemble();
  const auto extra_r = m.rows() - n, extra_c = m.cols() - n;
  return SpectralNorm(BlockDiag(qi, MatrixXd::Identity(extra_r, extra_r)) * m *
                      BlockDiag(q, MatrixXd::Identity(extra_c, extra_c)));
}

AnalysisReport RunAnalysis(const LmiProblem& lp, const MatrixXd& m,
                           CertificateKind kind, const char* source,
                           const SolverOptions& options) {
  AnalysisReport rep;
  rep.certificate.kind = kind;
  rep.certificate.source = source;
  try {
    const FeasibilityResult r = SolveFeasibility(lp, options);
    rep.feasible = r.feasible();
    rep.margin = r.margin;
    rep.binding_constraint = r.binding_constraint;
    rep.certificate.X = lp.StructuredValue("X", r.assignment);
  } catch (const SolverTimeoutError& e) {
    rep.margin = e.best_margin();
    rep.certificate.X = CommutantElement::Identity(lp.group("X").structure);
  }
  rep.certificate.margin = rep.margin;
  rep.scaled_norm = ScaledNorm(m, rep.certificate.X);
  return rep;
}

PartitionedSystem StripPerformance(const PartitionedSystem& plant) {
  PartitionedSystem s = plant;
  const int n = plant.n(), p2 = plant.p2(), q2 = plant.q2();
  s.B1 = MatrixXd::Zero(n, 0);
  s.C1 = MatrixXd::Zero(0, n);
  s.D11 = MatrixXd::Zero(0, 0);
  s.D12 = MatrixXd::Zero(0, p2);
  s.D21 = MatrixXd::Zero(q2, 0);
  return s;
}

void CheckSynthesisInput(const PartitionedSystem& plant, Goal goal,
                         const ControllerDimSpec& dims) {
  plant.Validate();
  if (!plant.D22.isZero(0.0)) {
    throw UnsupportedError("synthesis requires D22 = 0");
  }
  if (goal == Goal::kPerformance && plant.p1() != plant.q1()) {
    throw DimensionError("performance synthesis needs p1 == q1");
  }
  if (static_cast<int>(dims.size()) != plant.structure.num_blocks()) {
    throw DimensionError("controller dimensions must have one entry per block");
  }
  for (const auto& d : dims) {
    if (d && *d < 0) throw DimensionError("controller dimensions must be >= 0");
  }
}

LmiProblem BaseLmis(const PartitionedSystem& plant, Goal goal) {
  return goal == Goal::kPerformance ? BuildPerformanceLmis(plant)
                                    : BuildStabilizationLmis(plant);
}

const char* BaseSource(Goal goal) {
  return goal == Goal::kPerformance ? kSourcePerformanceLmis
                                    : kSourceStabilizationLmis;
}

std::optional<int> BlockFromLabel(const std::string& label) {
  const auto pos = label.find("k=");
  if (pos == std::string::npos) return std::nullopt;
  return std::stoi(label.substr(pos + 2)) - 1;
}

// Solves and converts a timeout into a below-threshold result.
FeasibilityResult Solve(const LmiProblem& lp, const SolverOptions& options) {
  try {
    return SolveFeasibility(lp, options);
  } catch (const SolverTimeoutError& e) {
    FeasibilityResult r;
    r.margin = e.best_margin();
    r.binding_constraint = "step cap";
    return r;
  }
}

double CouplingScale(const MatrixXd& x0, const MatrixXd& y0) {
  const int n = static_cast<int>(x0.rows());
  MatrixXd c(2 * n, 2 * n);
  c << x0, MatrixXd::Identity(n, n), MatrixXd::Identity(n, n), y0;
  return std::max(MaxEigenvalue(c), 0.0);
}

// Best rank-r PSD part of X0 - Y0^{-1}.
MatrixXd TopPart(const MatrixXd& x0, const MatrixXd& y0, int r) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sym(x0 - y0.inverse()));
  const int n = static_cast<int>(x0.rows());
  MatrixXd out = MatrixXd::Zero(n, n);
  for (int i = n - 1; i >= std::max(0, n - r); --i) {
    const double lam = es.eigenvalues()(i);
    if (lam <= 0) break;
    out +=
        lam * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  }
  return out;
}

enum class RankObjective { kTailEigenvalues, kConeComplementarity };

struct RankResult {
  bool ok = false;
  VectorXd v;
  int iterations = 0;
  std::optional<int> failing_block;
};

class RankReducer {
 public:
  RankReducer(const LmiProblem& base, const ControllerDimSpec& dims,
              const SynthesisOptions& options)
      : base_(base), dims_(dims), options_(options) {
    relaxed_ = base;
    AddCouplingConstraints(relaxed_, "X", "Y", /*strict=*/false);
  }

  // Rounds v to the prescribed ranks on either side and verifies directly.
  std::optional<VectorXd> Project(const VectorXd& v) const {
    const CommutantElement x = base_.StructuredValue("X", v);
    const CommutantElement y = base_.StructuredValue("Y", v);
    const auto& s = x.structure();
    for (int side = 0; side < 2; ++side) {
      std::vector<MatrixXd> xc = x.cores(), yc = y.cores();
      bool ok = true;
      for (int k = 0; k < s.num_blocks() && ok; ++k) {
        if (!dims_[k] || s.block(k).n == 0) continue;
        const MatrixXd top = TopPart(xc[k], yc[k], *dims_[k]);
        if (side == 0) {
          const MatrixXd inner = Sym(xc[k] - top);
          Eigen::LLT<MatrixXd> llt(inner);
          if (llt.info() != Eigen::Success) {
            ok = false;
            break;
          }
          yc[k] = Sym(inner.inverse());
        } else {
          xc[k] = Sym(yc[k].inverse() + top);
        }
      }
      if (!ok) continue;
      if (auto w =
              Verify(CommutantElement(s, xc), CommutantElement(s, yc), v)) {
        return w;
      }
    }
    return std::nullopt;
  }

  std::optional<VectorXd> Verify(const CommutantElement& x,
                                 const CommutantElement& y,
                                 const VectorXd& like) const {
    if (!(x.MinEigenvalue() > 0) || !(y.MinEigenvalue() > 0)) {
      return std::nullopt;
    }
    VectorXd w = like;
    base_.Encode("X", x, w);
    base_.Encode("Y", y, w);
    if (EvaluateMargin(base_, w) < options_.solver.margin_tol) {
      return std::nullopt;
    }
    for (const auto& r : CouplingRank(x, y, dims_, options_.rank_tol)) {
      if (!r.passes) return std::nullopt;
    }
    return w;
  }

  std::optional<int> FirstFailingBlock(const VectorXd& v) const {
    const auto reps =
        CouplingRank(base_.StructuredValue("X", v),
                     base_.StructuredValue("Y", v), dims_, options_.rank_tol);
    for (const auto& r : reps) {
      if (!r.passes) return r.block;
    }
    return std::nullopt;
  }

  // Linearized objective at v.
  VectorXd Objective(const VectorXd& v, RankObjective kind) const {
    VectorXd c = VectorXd::Zero(relaxed_.num_variables());
    const CommutantElement x = base_.StructuredValue("X", v);
    const CommutantElement y = base_.StructuredValue("Y", v);
    const auto& s = x.structure();
    for (int k = 0; k < s.num_blocks(); ++k) {
      const int n = s.block(k).n;
      if (!dims_[k] || n == 0) continue;
      MatrixXd w;
      if (kind == RankObjective::kConeComplementarity) {
        w = BlockDiag(y.core(k), x.core(k));
      } else {
        MatrixXd cm(2 * n, 2 * n);
        cm << x.core(k), MatrixXd::Identity(n, n), MatrixXd::Identity(n, n),
            y.core(k);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sym(cm));
        const int tail = n - *dims_[k];
        if (tail <= 0) continue;
        const MatrixXd u = es.eigenvectors().leftCols(tail);
        w = u * u.transpose();
      }
      const AffineMatrixExpr e = CouplingExpr(relaxed_, "X", "Y", k);
      for (const auto& [i, f] : e.terms) c(i) += w.cwiseProduct(f).sum();
    }
    return c;
  }

  RankResult Run(const VectorXd& start, double start_margin, RankObjective kind,
                 const std::vector<VectorXd>& extra_candidates) const {
    RankResult res;
    for (const auto& cand : extra_candidates) {
      if (auto w = Project(cand)) {
        res.ok = true;
        res.v = *w;
        return res;
      }
    }
    VectorXd v = start;
    const double delta = 0.5 * start_margin;
    double last = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int it = 0; it <= options_.max_heuristic_iter; ++it) {
      res.iterations = it;
      if (auto w = Project(v)) {
        res.ok = true;
        res.v = *w;
        return res;
      }
      if (it == options_.max_heuristic_iter) break;
      const VectorXd c = Objective(v, kind);
      LinearObjectiveResult r;
      try {
        r = MinimizeLinear(relaxed_, c, delta, v, options_.solver);
      } catch (const std::invalid_argument&) {
        break;
      }
      v = r.assignment;
      const double value = Objective(v, kind).dot(v);
      if (std::abs(last - value) <= 1e-10 * std::max(1.0, std::abs(value))) {
        if (++stalls >= 3) break;
      } else {
        stalls = 0;
      }
      last = value;
    }
    res.v = v;
    res.failing_block = FirstFailingBlock(v);
    if (!res.failing_block) res.failing_block = 0;
    return res;
  }

 private:
  const LmiProblem& base_;
  ControllerDimSpec dims_;
  SynthesisOptions options_;
  LmiProblem relaxed_;
};

void Finish(SynthesisOutcome& out, const PartitionedSystem& plant, Goal goal,
            const std::vector<int>& ctrl_dims,
            const SynthesisOptions& options) {
  const Certificate& cert = *out.certificate;
  try {
    Reconstruction rec =
        ReconstructController(plant, cert.X, *cert.Y, ctrl_dims, goal, options);
    out.controller = std::move(rec.controller);
    out.closed_loop = std::move(rec.closed_loop);
    out.status = SynthesisStatus::kSuccess;
    out.message = "controller reconstructed and closed loop certified";
  } catch (const ReconstructionError& e) {
    out.status = SynthesisStatus::kReconstructionGap;
    out.message = e.what();
  }
}

void FillCoupling(SynthesisOutcome& out, const ControllerDimSpec& dims,
                  double tol) {
  out.coupling =
      CouplingRank(out.certificate->X, *out.certificate->Y, dims, tol);
  out.minimal_dims.clear();
  for (const auto& r : out.coupling)
    out.minimal_dims.push_back(r.minimal_ctrl_dim);
}

SynthesisOutcome UnconstrainedStabilization(const PartitionedSystem& plant,
                                            const SynthesisOptions& options) {
  SynthesisOutcome out;
  const LmiProblem lp = BuildUnconstrainedLmis(plant);
  const FeasibilityResult r = Solve(lp, options.solver);
  if (!r.feasible()) {
    out.status = SynthesisStatus::kLmiInfeasible;
    out.failing_constraint = r.binding_constraint;
    out.message = "inequalities not strictly feasible (margin " +
                  FormatNumber(r.margin) + " at " + r.binding_constraint + ")";
    return out;
  }
  CommutantElement x = lp.StructuredValue("X", r.assignment);
  CommutantElement y = lp.StructuredValue("Y", r.assignment);

  // The projected inequalities are homogeneous, so any common scaling keeps
  // them; mu^2 = 4 max_k lambda_max(Y_k0^{-1} X_k0^{-1}) makes every coupling
  // block positive definite while keeping X Y well conditioned.
  double lam = 0;
  const auto& s = plant.structure;
  for (int k = 0; k < s.num_blocks(); ++k) {
    if (s.block(k).n == 0) continue;
    Eigen::LLT<MatrixXd> llt(x.core(k));
    const MatrixXd li =
        llt.matrixL().solve(MatrixXd::Identity(s.block(k).n, s.block(k).n));
    lam =
        std::max(lam, MaxEigenvalue(li * y.core(k).inverse() * li.transpose()));
  }
  double mu = lam > 0 ? 2.0 * std::sqrt(lam) : 1.0;
  for (int tries = 0; tries < 60; ++tries) {
    const auto reps = CouplingRank(x.Scaled(mu), y.Scaled(mu),
                                   UnconstrainedDims(s), options.rank_tol);
    const bool ok = std::all_of(reps.begin(), reps.end(), [](const auto& rep) {
      return rep.min_eigenvalue > 0 || rep.rank == 0;
    });
    if (ok) break;
    mu *= 2.0;
  }
  x = x.Scaled(mu);
  y = y.Scaled(mu);
  const LmiProblem projected = BuildStabilizationLmis(plant);
  VectorXd v(projected.num_variables());
  projected.Encode("X", x, v);
  projected.Encode("Y", y, v);

  Certificate cert;
  cert.kind = CertificateKind::kQStability;
  cert.source = kSourceStabilizationLmis;
  cert.X = x;
  cert.Y = y;
  cert.margin = EvaluateMargin(projected, v);
  out.certificate = cert;
  FillCoupling(out, UnconstrainedDims(s), options.rank_tol);
  if (!(cert.margin > 0)) {
    out.status = SynthesisStatus::kLmiInfeasible;
    out.message = "coupling scaling lost the inequality margin";
    return out;
  }
  Finish(out, plant, Goal::kStabilization, out.minimal_dims, options);
  return out;
}

// Trades half of the margin for the smallest trace(X) + trace(Y). The
// max-margin point sits on the trace caps, which makes the completed closed
// loop Lyapunov matrix badly conditioned.
void Center(const LmiProblem& coupled, const SynthesisOptions& options,
            FeasibilityResult& relaxed) {
  VectorXd c = VectorXd::Zero(coupled.num_variables());
  const auto identity = [](const MatrixXd& e) { return e; };
  for (const char* g : {"X", "Y"}) {
    for (const auto& [i, f] : coupled.Linear(g, identity).terms) {
      c(i) += f.trace();
    }
  }
  try {
    const LinearObjectiveResult r = MinimizeLinear(
        coupled, c, 0.5 * relaxed.margin, relaxed.assignment, options.solver);
    const double margin = EvaluateMargin(coupled, r.assignment);
    if (margin >= options.solver.margin_tol) {
      relaxed.assignment = r.assignment;
      relaxed.margin = margin;
    }
  } catch (const std::invalid_argument&) {
    // Start not interior at the reduced margin: keep the max-margin point.
  }
}

// Solves the relaxation (inequalities plus strict coupling) shared by the
// prescribed-dimension and static pipelines.
bool SolveRelaxation(const PartitionedSystem& plant, Goal goal,
                     const SynthesisOptions& options, SynthesisOutcome& out,
                     LmiProblem& base, FeasibilityResult& relaxed) {
  base = BaseLmis(plant, goal);
  const FeasibilityResult r0 = Solve(base, options.solver);
  if (!r0.feasible()) {
    out.status = SynthesisStatus::kLmiInfeasible;
    out.failing_constraint = r0.binding_constraint;
    out.message = "inequalities not strictly feasible (margin " +
                  FormatNumber(r0.margin) + " at " + r0.binding_constraint +
                  ")";
    return false;
  }
  LmiProblem coupled = base;
  AddCouplingConstraints(coupled, "X", "Y", /*strict=*/true);
  relaxed = Solve(coupled, options.solver);
  if (!relaxed.feasible()) {
    out.status = SynthesisStatus::kCouplingFailure;
    out.failing_constraint = relaxed.binding_constraint;
    out.failing_block = BlockFromLabel(relaxed.binding_constraint);
    out.message = "coupling conditions not strictly feasible (margin " +
                  FormatNumber(relaxed.margin) + " at " +
                  relaxed.binding_constraint + ")";
    return false;
  }
  Center(coupled, options, relaxed);
  return true;
}

Certificate PairCertificate(const LmiProblem& base, Goal goal,
                            const VectorXd& v) {
  Certificate cert;
  cert.kind = goal == Goal::kPerformance ? CertificateKind::kQPerformance
                                         : CertificateKind::kQStability;
  cert.source = BaseSource(goal);
  cert.X = base.StructuredValue("X", v);
  cert.Y = base.StructuredValue("Y", v);
  cert.margin = EvaluateMargin(base, v);
  return cert;
}

SynthesisOutcome PrescribedSynthesis(const PartitionedSystem& plant, Goal goal,
                                     const ControllerDimSpec& dims,
                                     const SynthesisOptions& options) {
  SynthesisOutcome out;
  LmiProblem base;
  FeasibilityResult relaxed;
  if (!SolveRelaxation(plant, goal, options, out, base, relaxed)) return out;

  VectorXd v = relaxed.assignment;
  RankReducer reducer(base, dims, options);
  if (reducer.FirstFailingBlock(v)) {
    const RankResult rr =
        reducer.Run(v, relaxed.margin, RankObjective::kTailEigenvalues, {});
    out.heuristic_iterations = rr.iterations;
    if (!rr.ok) {
      out.certificate = PairCertificate(base, goal, rr.v);
      FillCoupling(out, dims, options.rank_tol);
      out.status = SynthesisStatus::kRankFailure;
      out.failing_block = rr.failing_block;
      out.message =
          "rank reduction did not reach the prescribed dimension "
          "at block " +
          std::to_string(*rr.failing_block + 1);
      return out;
    }
    v = rr.v;
  }
  out.certificate = PairCertificate(base, goal, v);
  FillCoupling(out, dims, options.rank_tol);
  std::vector<int> ctrl_dims;
  for (size_t k = 0; k < dims.size(); ++k) {
    ctrl_dims.push_back(dims[k] ? *dims[k] : out.minimal_dims[k]);
  }
  Finish(out, plant, goal, ctrl_dims, options);
  return out;
}

}  // namespace

const char* ToString(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::kSuccess:
      return "success";
    case SynthesisStatus::kLmiInfeasible:
      return "lmi-infeasible";
    case SynthesisStatus::kCouplingFailure:
      return "coupling-failure";
    case SynthesisStatus::kRankFailure:
      return "rank-failure";
    case SynthesisStatus::kHeuristicFailure:
      return "heuristic-failure";
    case SynthesisStatus::kReconstructionGap:
      return "reconstruction-gap";
  }
  return "unknown";
}

LmiProblem BuildQStabilityLmi(const MatrixXd& a,
                              const BlockStructure& structure) {
  if (a.rows() != a.cols() || a.rows() != structure.total_dim()) {
    throw DimensionError(
        "state matrix must be square of the structure "
        "dimension");
  }
  LmiProblem lp(kSourceQStability);
  lp.AddStructuredVariable("X", structure);
  lp.AddPositivity("X");
  lp.AddConstraint("Lyapunov", lp.Linear("X", [&](const MatrixXd& x) {
    return MatrixXd(a * x * a.transpose() - x);
  }));
  return lp;
}

LmiProblem BuildQPerformanceLmi(const LftModel& model) {
  model.Validate();
  const SystemMatrix& s = model.system;
  if (s.inputs() != s.outputs()) {
    throw DimensionError("performance needs a square channel");
  }
  const MatrixXd m = s.Stacked();
  const int n = s.states(), p = s.inputs();
  LmiProblem lp(kSourceQPerformance);
  lp.AddStructuredVariable("X", model.structure);
  lp.AddPositivity("X");
  AffineMatrixExpr e = lp.Linear("X", [&](const MatrixXd& x) {
    const MatrixXd w = BlockDiag(x, MatrixXd::Zero(p, p));
    return MatrixXd(m * w * m.transpose() - w);
  });
  const MatrixXd unit =
      BlockDiag(MatrixXd::Zero(n, n), MatrixXd::Identity(p, p));
  e += AffineMatrixExpr(m * unit * m.transpose() - unit);
  lp.AddConstraint("performance", std::move(e));
  return lp;
}

AnalysisReport CheckQStability(const MatrixXd& a,
                               const BlockStructure& structure,
                               const SolverOptions& options) {
  return RunAnalysis(BuildQStabilityLmi(a, structure), a,
                     CertificateKind::kQStability, kSourceQStability, options);
}

AnalysisReport CheckQPerformance(const LftModel& model,
                                 const SolverOptions& options) {
  return RunAnalysis(BuildQPerformanceLmi(model), model.system.Stacked(),
                     CertificateKind::kQPerformance, kSourceQPerformance,
                     options);
}

double CertificateMargin(const Certificate& cert,
                         const PartitionedSystem& plant,
                         const Controller* controller) {
  if (cert.closed_loop) {
    if (controller == nullptr) {
      throw std::invalid_argument("closed-loop certificate needs a controller");
    }
    const LftModel model = CloseLoop(plant, *controller).MergedModel();
    const LmiProblem lp =
        cert.kind == CertificateKind::kQPerformance
            ? BuildQPerformanceLmi(model)
            : BuildQStabilityLmi(model.system.A, model.structure);
    VectorXd v(lp.num_variables());
    lp.Encode("X", cert.X, v);
    return EvaluateMargin(lp, v);
  }
  LmiProblem lp;
  if (cert.source == kSourceQStability) {
    lp = BuildQStabilityLmi(plant.A, plant.structure);
  } else if (cert.source == kSourceQPerformance) {
    lp = BuildQPerformanceLmi(plant.PerformanceModel());
  } else if (cert.source == kSourcePerformanceLmis) {
    lp = BuildPerformanceLmis(plant);
  } else if (cert.source == kSourceStabilizationLmis) {
    lp = BuildStabilizationLmis(plant);
  } else if (cert.source == kSourceUnconstrainedLmis) {
    lp = BuildUnconstrainedLmis(plant);
  } else {
    throw std::invalid_argument("unknown certificate source '" + cert.source +
                                "'");
  }
  VectorXd v(lp.num_variables());
  lp.Encode("X", cert.X, v);
  if (lp.has_group("Y")) {
    if (!cert.Y) throw std::invalid_argument("certificate lacks Y");
    lp.Encode("Y", *cert.Y, v);
  }
  return EvaluateMargin(lp, v);
}

SynthesisOutcome Synthesize(const PartitionedSystem& plant, Goal goal,
                            const ControllerDimSpec& dims,
                            const SynthesisOptions& options) {
  CheckSynthesisInput(plant, goal, dims);
  const bool all_static = std::all_of(
      dims.begin(), dims.end(), [](const DimBound& d) { return d && *d == 0; });
  if (all_static) return StaticSynthesisHeuristic(plant, goal, options);
  const bool all_free = std::all_of(dims.begin(), dims.end(),
                                    [](const DimBound& d) { return !d; });
  if (goal == Goal::kStabilization && all_free) {
    return UnconstrainedStabilization(plant, options);
  }
  return PrescribedSynthesis(plant, goal, dims, options);
}

SynthesisOutcome StaticSynthesisHeuristic(const PartitionedSystem& plant,
                                          Goal goal,
                                          const SynthesisOptions& options) {
  const ControllerDimSpec dims = StaticDims(plant.structure);
  CheckSynthesisInput(plant, goal, dims);
  SynthesisOutcome out;
  LmiProblem base;
  FeasibilityResult relaxed;
  if (!SolveRelaxation(plant, goal, options, out, base, relaxed)) return out;

  VectorXd identity = relaxed.assignment;
  base.Encode("X", CommutantElement::Identity(plant.structure), identity);
  base.Encode("Y", CommutantElement::Identity(plant.structure), identity);
  RankReducer reducer(base, dims, options);
  const RankResult rr =
      reducer.Run(relaxed.assignment, relaxed.margin,
                  RankObjective::kConeComplementarity, {identity});
  out.heuristic_iterations = rr.iterations;
  out.certificate = PairCertificate(base, goal, rr.v);
  FillCoupling(out, dims, options.rank_tol);
  if (!rr.ok) {
    out.status = SynthesisStatus::kHeuristicFailure;
    out.failing_block = rr.failing_block;
    out.message = "no X with both inequalities at Y = X^{-1} found after " +
                  std::to_string(rr.iterations) + " iterations";
    return out;
  }
  Finish(out, plant, goal, std::vector<int>(dims.size(), 0), options);
  return out;
}

Reconstruction ReconstructController(const PartitionedSystem& plant,
                                     const CommutantElement& x,
                                     const CommutantElement& y,
                                     const std::vector<int>& ctrl_dims,
                                     Goal goal,
                                     const SynthesisOptions& options) {
  plant.Validate();
  const PartitionedSystem work =
      goal == Goal::kPerformance ? plant : StripPerformance(plant);
  const BlockStructure& s = plant.structure;
  if (!(x.structure() == s) || !(y.structure() == s)) {
    throw DimensionError("X and Y must live on the plant structure");
  }
  const ShufflePermutation perm(s, ctrl_dims);

  // Per block: P^{-1} = [X_k0 F; F^T I] with F F^T = X_k0 - Y_k0^{-1}, so
  // that the leading block of P is Y_k0.
  std::vector<MatrixXd> cores;
  for (int k = 0; k < s.num_blocks(); ++k) {
    const int n = s.block(k).n, nk = ctrl_dims[k];
    if (n == 0) {
      cores.push_back(MatrixXd::Identity(nk, nk));
      continue;
    }
    const MatrixXd& x0 = x.core(k);
    const MatrixXd& y0 = y.core(k);
    const double cut = options.rank_tol * CouplingScale(x0, y0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sym(x0 - y0.inverse()));
    const VectorXd& lam = es.eigenvalues();
    if (lam(0) < -cut) {
      throw ReconstructionError(
          "coupling violated at block " + std::to_string(k + 1), lam(0));
    }
    const int rank = static_cast<int>((lam.array() > cut).count());
    if (rank > nk) {
      throw ReconstructionError(
          "block " + std::to_string(k + 1) + " needs " + std::to_string(rank) +
              " controller copies, " + std::to_string(nk) + " allowed",
          0.0);
    }
    MatrixXd f = MatrixXd::Zero(n, nk);
    for (int i = 0; i < rank; ++i) {
      f.col(i) = std::sqrt(lam(n - 1 - i)) * es.eigenvectors().col(n - 1 - i);
    }
    MatrixXd pinv(n + nk, n + nk);
    pinv << x0, f, f.transpose(), MatrixXd::Identity(nk, nk);
    Eigen::LLT<MatrixXd> llt(Sym(pinv));
    if (llt.info() != Eigen::Success) {
      throw ReconstructionError("completion of block " + std::to_string(k + 1) +
                                    " is not positive definite",
                                0.0);
    }
    cores.push_back(Sym(llt.solve(MatrixXd::Identity(n + nk, n + nk))));
  }
  CommutantElement p_merged(perm.merged(), cores);
  if (goal == Goal::kStabilization) {
    // The closed-loop inequality is homogeneous in P.
    const double scale = MaxEigenvalue(p_merged.Assemble());
    if (scale > 0) p_merged = p_merged.Scaled(1.0 / scale);
  }

  const int n = work.n(), nk = perm.controller().total_dim();
  const int p1 = work.p1(), p2 = work.p2(), q1 = work.q1(), q2 = work.q2();
  const int ncl = n + nk;
  MatrixXd m0 = MatrixXd::Zero(ncl + q1, ncl + p1);
  m0.block(0, 0, n, n) = work.A;
  m0.block(0, ncl, n, p1) = work.B1;
  m0.block(ncl, 0, q1, n) = work.C1;
  m0.block(ncl, ncl, q1, p1) = work.D11;
  MatrixXd bbar = MatrixXd::Zero(ncl + q1, nk + p2);
  bbar.block(0, nk, n, p2) = work.B2;
  bbar.block(n, 0, nk, nk) = MatrixXd::Identity(nk, nk);
  bbar.block(ncl, nk, q1, p2) = work.D12;
  MatrixXd cbar = MatrixXd::Zero(nk + q2, ncl + p1);
  cbar.block(0, n, nk, nk) = MatrixXd::Identity(nk, nk);
  cbar.block(nk, 0, q2, n) = work.C2;
  cbar.block(nk, ncl, q2, p1) = work.D21;

  // ||S_out^{-1/2} M(K) S_in^{1/2}|| < 1 as [-I N(K); N(K)^T -I] < 0, which is
  // M(K) S_in M(K)^T < S_out after a congruence and keeps the margin
  // independent of the conditioning of P.
  const CommutantElement p_root = p_merged.SquareRoot();
  const MatrixXd root = perm.FromMerged(p_root.Assemble());
  const MatrixXd root_inv = perm.FromMerged(p_root.Inverse().Assemble());
  const MatrixXd l_out = BlockDiag(root_inv, MatrixXd::Identity(q1, q1));
  const MatrixXd r_in = BlockDiag(root, MatrixXd::Identity(p1, p1));
  const int rows = ncl + q1, cols = ncl + p1;
  LmiProblem klmi("controller");
  klmi.AddFreeVariable("K", nk + p2, nk + q2);
  AffineMatrixExpr e(MatrixXd::Zero(rows + cols, rows + cols));
  const MatrixXd n0 = l_out * m0 * r_in;
  e.constant.topLeftCorner(rows, rows) = -MatrixXd::Identity(rows, rows);
  e.constant.topRightCorner(rows, cols) = n0;
  e.constant.bottomLeftCorner(cols, rows) = n0.transpose();
  e.constant.bottomRightCorner(cols, cols) = -MatrixXd::Identity(cols, cols);
  const MatrixXd lb = l_out * bbar, cr = cbar * r_in;
  e += klmi.Linear("K", [&](const MatrixXd& kk) {
    MatrixXd out = MatrixXd::Zero(rows + cols, rows + cols);
    const MatrixXd nk_part = lb * kk * cr;
    out.topRightCorner(rows, cols) = nk_part;
    out.bottomLeftCorner(cols, rows) = nk_part.transpose();
    return out;
  });
  klmi.AddConstraint("closed-loop", std::move(e));
  const FeasibilityResult kr = Solve(klmi, options.solver);
  if (!kr.feasible()) {
    throw ReconstructionError("controller inequality margin " +
                                  FormatNumber(kr.margin) + " below threshold",
                              kr.margin);
  }
  const MatrixXd kmat = klmi.FreeValue("K", kr.assignment);

  Reconstruction rec;
  rec.k_margin = kr.margin;
  rec.controller = Controller{kmat.topLeftCorner(nk, nk),
                              kmat.topRightCorner(nk, q2),
                              kmat.bottomLeftCorner(p2, nk),
                              kmat.bottomRightCorner(p2, q2),
                              ctrl_dims,
                              perm.controller()};

  const LftModel merged = CloseLoop(work, rec.controller).MergedModel();
  const LmiProblem cl =
      goal == Goal::kPerformance
          ? BuildQPerformanceLmi(merged)
          : BuildQStabilityLmi(merged.system.A, merged.structure);
  VectorXd pv(cl.num_variables());
  cl.Encode("X", p_merged, pv);
  Certificate cert;
  cert.kind = goal == Goal::kPerformance ? CertificateKind::kQPerformance
                                         : CertificateKind::kQStability;
  cert.source =
      goal == Goal::kPerformance ? kSourceQPerformance : kSourceQStability;
  cert.closed_loop = true;
  cert.X = p_merged;
  cert.margin = EvaluateMargin(cl, pv);

  // Independent re-certification of the closed loop.
  const AnalysisReport check =
      goal == Goal::kPerformance
          ? CheckQPerformance(merged, options.solver)
          : CheckQStability(merged.system.A, merged.structure, options.solver);
  if (check.margin > cert.margin) {
    cert.X = check.certificate.X;
    cert.margin = check.margin;
  }
  if (!(cert.margin >= options.solver.margin_tol)) {
    throw ReconstructionError("closed loop re-certified only with margin " +
                                  FormatNumber(cert.margin),
                              cert.margin);
  }
  rec.closed_loop = std::move(cert);
  return rec;
}

ControllerDimSpec ApplicationPreset(PresetKind kind,
                                    const BlockStructure& structure) {
  const auto freq = structure.frequency_block();
  if (!freq) {
    throw StructureError("preset needs a designated frequency block");
  }
  if (kind == PresetKind::kLpv) return UnconstrainedDims(structure);
  ControllerDimSpec dims = StaticDims(structure);
  dims[*freq] = std::nullopt;
  return dims;
}

}  // namespace lft
