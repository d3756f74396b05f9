#include "lft/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double SpectralNorm(const MatrixXd& m) {
  if (m.size() == 0) return 0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

double SigmaMin(const MatrixXd& m) {
  if (m.size() == 0) return 1;
  const auto s = Eigen::JacobiSVD<MatrixXd>(m).singularValues();
  return s(s.size() - 1);
}

void Record(OracleReport& r, Violation v) {
  ++r.violation_count;
  if (static_cast<int>(r.violations.size()) < kMaxStoredViolations) {
    r.violations.push_back(std::move(v));
  }
}

// Stability of one sampled ray; records a violation and returns false when
// I - s Delta A is singular for some s in [0, 1].
bool CheckRay(const MatrixXd& a, const MatrixXd& delta, int index,
              OracleReport& r) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return true;
  const MatrixXd da = delta * a;
  const MatrixXd lhs = MatrixXd::Identity(n, n) - da;
  const double smin = SigmaMin(lhs);
  r.worst_sigma_min = std::min(r.worst_sigma_min, smin);
  const Eigen::VectorXcd eig = da.eigenvalues();
  double rho = 0, crossing = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double mod = std::abs(eig(i));
    rho = std::max(rho, mod);
    const bool real = std::abs(eig(i).imag()) <= 1e-6 * std::max(1.0, mod);
    if (real && eig(i).real() >= 1.0 - kBoundTol) {
      crossing = std::max(crossing, eig(i).real());
    }
  }
  r.max_spectral_radius = std::max(r.max_spectral_radius, rho);
  const double smax = SpectralNorm(lhs);
  const bool ill = smin <= 0 || smax / smin > kIllPosedCondition;
  if (crossing == 0 && !ill) return true;
  Violation v;
  v.kind = ViolationKind::kStability;
  v.sample = index;
  v.delta = crossing > 0 ? MatrixXd(delta / crossing) : delta;
  v.value =
      crossing > 0 ? SigmaMin(MatrixXd::Identity(n, n) - v.delta * a) : smin;
  Record(r, std::move(v));
  return false;
}

// Performance part: the norm of the evaluated transfer against 1.
void CheckNorm(const MatrixXd& f, const MatrixXd& delta, int index,
               OracleReport& r) {
  const double norm = SpectralNorm(f);
  r.worst_norm = std::max(r.worst_norm, norm);
  if (norm < 1.0 - kBoundTol) return;
  r.bound_attained = true;
  Record(r, {ViolationKind::kPerformance, index, delta, norm});
}

OracleReport NewReport(int n_samples, std::uint64_t seed, double radius) {
  if (n_samples < 0) throw std::invalid_argument("negative sample count");
  if (!(radius >= 0)) throw std::invalid_argument("negative radius");
  OracleReport r;
  r.samples = n_samples;
  r.seed = seed;
  r.radius = radius;
  r.worst_sigma_min = std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace

std::string OracleReport::Verdict() const {
  if (violation_count == 0) {
    return "no violation found in " + std::to_string(samples) + " samples";
  }
  return std::to_string(violation_count) + " violation(s) in " +
         std::to_string(samples) + " samples";
}

std::uint64_t SampleSeed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of both inputs.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

OracleReport SampleRobustStability(const MatrixXd& a,
                                   const BlockStructure& structure,
                                   int n_samples, std::uint64_t seed,
                                   double radius) {
  if (a.rows() != a.cols() || a.rows() != structure.total_dim()) {
    throw DimensionError("A does not match the structure dimension");
  }
  OracleReport r = NewReport(n_samples, seed, radius);
  r.worst_norm = kNaN;
  for (int i = 0; i < n_samples; ++i) {
    const auto s = SampleUncertainty(structure, radius, SampleSeed(seed, i));
    CheckRay(a, s.assembled, i, r);
  }
  return r;
}

OracleReport SampleRobustPerformance(const LftModel& model, int n_samples,
                                     std::uint64_t seed, double radius) {
  model.Validate();
  if (model.system.inputs() != model.system.outputs()) {
    throw DimensionError("performance sampling needs a square channel");
  }
  OracleReport r = NewReport(n_samples, seed, radius);
  for (int i = 0; i < n_samples; ++i) {
    const auto s =
        SampleUncertainty(model.structure, radius, SampleSeed(seed, i));
    if (!CheckRay(model.system.A, s.assembled, i, r)) continue;
    CheckNorm(UpperLft(model.system, s.assembled), s.assembled, i, r);
  }
  return r;
}

OracleReport ClosedLoopGainCheck(const PartitionedSystem& plant,
                                 const Controller& controller, int n_samples,
                                 std::uint64_t seed, double radius) {
  plant.Validate();
  controller.Validate(plant);
  const ClosedLoop cl = CloseLoop(plant, controller);
  const bool performance = plant.p1() > 0 || plant.q1() > 0;
  OracleReport r = NewReport(n_samples, seed, radius);
  if (!performance) r.worst_norm = kNaN;
  const SystemMatrix full = plant.FullModel().system;
  const int n = plant.n(), nk = controller.states();
  const int p1 = plant.p1(), q1 = plant.q1();
  for (int i = 0; i < n_samples; ++i) {
    const auto s =
        SampleUncertainty(plant.structure, radius, SampleSeed(seed, i));
    const MatrixXd dk = AssembleUncertainty(controller.structure, s.cores);
    MatrixXd dcl = MatrixXd::Zero(n + nk, n + nk);
    dcl.topLeftCorner(n, n) = s.assembled;
    dcl.bottomRightCorner(nk, nk) = dk;
    if (!IsInStructure(cl.permutation.ToMerged(dcl), cl.merged_structure())) {
      r.coupling_consistent = false;
    }
    if (!CheckRay(cl.system.A, dcl, i, r) || !performance) continue;
    const MatrixXd f = UpperLft(cl.system, dcl);
    CheckNorm(f, dcl, i, r);
    // Nested path: the uncertain plant closed with the uncertain controller.
    try {
      const MatrixXd g = UpperLft(full, s.assembled);
      const Eigen::Index r2 = g.rows() - q1, c2 = g.cols() - p1;
      const SystemMatrix gs{g.topLeftCorner(q1, p1), g.topRightCorner(q1, c2),
                            g.bottomLeftCorner(r2, p1),
                            g.bottomRightCorner(r2, c2)};
      const MatrixXd kd = UpperLft(controller.AsSystem(), dk);
      const MatrixXd f2 = LowerLft(gs, kd);
      const double gap = (f - f2).norm() / std::max(1.0, f.norm());
      r.max_path_discrepancy = std::max(r.max_path_discrepancy, gap);
      ++r.compared_samples;
    } catch (const IllPosedError&) {
      // The open-loop plant may be ill-posed where the closed loop is not.
    }
  }
  return r;
}

}  // namespace lft
