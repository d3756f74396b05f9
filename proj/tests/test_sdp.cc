#include <gtest/gtest.h>

#include "lft/errors.h"
#include "lft/lmi.h"
#include "lft/sdp.h"
#include "test_util.h"

namespace lft {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomMatrix;
using testing::RandomPlant;
using testing::ScalarPlant;

MatrixXd Scalar(double x) { return MatrixXd::Constant(1, 1, x); }

// {c * Y < 0, Y > 0} over a scalar structured variable.
LmiProblem ScalarFamily(double c) {
  LmiProblem lp("scalar");
  lp.AddStructuredVariable("Y", MakeBlockStructure({{1, 1}}));
  lp.AddPositivity("Y");
  lp.AddConstraint("family", lp.Linear("Y", [c](const MatrixXd& y) {
    return MatrixXd(c * y);
  }));
  return lp;
}

TEST(SolveFeasibilityTest, ScalarFamilies) {
  EXPECT_FALSE(SolveFeasibility(ScalarFamily(3.0)).feasible());
  EXPECT_FALSE(SolveFeasibility(ScalarFamily(0.0)).feasible());
  const auto r = SolveFeasibility(ScalarFamily(0.25 - 1.0));
  ASSERT_TRUE(r.feasible());
  EXPECT_GT(r.assignment(0), 0);
  EXPECT_EQ(r.status, FeasibilityStatus::kFeasible);
}

TEST(SolveFeasibilityTest, UnconstrainedScalarExample) {
  const LmiProblem lp = BuildUnconstrainedLmis(ScalarPlant(2, 1, 1));
  const auto r = SolveFeasibility(lp);
  ASSERT_TRUE(r.feasible());
  EXPECT_LT(r.assignment(0), 1.0 / 3);
  EXPECT_LT(r.assignment(1), 1.0 / 3);
  // The optimum balances positivity against 1 - 3X: X = Y = 1/4.
  EXPECT_NEAR(r.margin, 0.25, 1e-6);
}

TEST(SolveFeasibilityTest, InfeasibleFamiliesReportBinding) {
  const auto r = SolveFeasibility(BuildStabilizationLmis(ScalarPlant(2, 0, 1)));
  EXPECT_FALSE(r.feasible());
  EXPECT_EQ(r.binding_constraint, "Y-LMI");
  const auto r2 =
      SolveFeasibility(BuildUnconstrainedLmis(ScalarPlant(2, 1, 0)));
  EXPECT_FALSE(r2.feasible());
  EXPECT_EQ(r2.binding_constraint, "X-LMI");
}

TEST(EvaluateMarginTest, Examples) {
  LmiProblem lp;
  lp.AddScalarVariable("t");
  lp.AddConstraint("zero", AffineMatrixExpr(MatrixXd::Zero(2, 2)));
  VectorXd v = VectorXd::Zero(1);
  EXPECT_EQ(EvaluateMargin(lp, v), 0.0);
  LmiProblem lp2;
  lp2.AddScalarVariable("t");
  lp2.AddConstraint("minus-identity",
                    AffineMatrixExpr(-MatrixXd::Identity(3, 3)));
  EXPECT_EQ(EvaluateMargin(lp2, v), 1.0);
  EXPECT_THROW(EvaluateMargin(lp2, VectorXd(0)), std::invalid_argument);
}

TEST(EvaluateMarginTest, NonstrictConstraintsDoNotEnter) {
  LmiProblem lp;
  lp.AddScalarVariable("t");
  lp.AddConstraint("strict", AffineMatrixExpr(-MatrixXd::Identity(1, 1)));
  lp.AddConstraint("weak", AffineMatrixExpr(MatrixXd::Identity(1, 1)), false);
  EXPECT_EQ(EvaluateMargin(lp, VectorXd::Zero(1)), 1.0);
  EXPECT_THROW(SolveFeasibility(lp), std::invalid_argument);
}

TEST(SolveFeasibilityTest, NeedsAStrictConstraint) {
  LmiProblem lp;
  lp.AddScalarVariable("t");
  EXPECT_THROW(SolveFeasibility(lp), std::invalid_argument);
}

TEST(SolveFeasibilityTest, SoundnessOnRandomProblems) {
  std::mt19937_64 rng(1);
  int feasible = 0;
  for (int t = 0; t < 30; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 2, 2);
    const auto p = RandomPlant(rng, s, {1, 1, 1, 1}, 0.6);
    const LmiProblem lp =
        t % 2 ? BuildPerformanceLmis(p) : BuildUnconstrainedLmis(p);
    const auto r = SolveFeasibility(lp);
    const double recheck = EvaluateMargin(lp, r.assignment);
    EXPECT_NEAR(recheck, r.margin, 1e-9 * std::max(1.0, std::abs(r.margin)));
    if (r.feasible()) {
      ++feasible;
      EXPECT_GE(recheck, SolverOptions{}.margin_tol);
    }
  }
  EXPECT_GT(feasible, 5);
}

TEST(SolveFeasibilityTest, BeatsRandomAssignments) {
  std::mt19937_64 rng(2);
  int trials = 0;
  while (trials < 50) {
    const auto s = testing::RandomStructure(rng, 2, 1, 2, 1);
    const auto p = RandomPlant(rng, s, {1, 1, 1, 1}, 0.5);
    const LmiProblem lp = BuildUnconstrainedLmis(p);
    const auto r = SolveFeasibility(lp);
    if (!r.feasible()) continue;
    ++trials;
    // Random pair inside the trace caps.
    std::vector<MatrixXd> xc, yc;
    for (const auto& b : s.blocks()) {
      xc.push_back(b.n ? MatrixXd(testing::RandomSpd(rng, b.n))
                       : MatrixXd(0, 0));
      yc.push_back(b.n ? MatrixXd(testing::RandomSpd(rng, b.n))
                       : MatrixXd(0, 0));
    }
    VectorXd v(lp.num_variables());
    lp.Encode("X", CommutantElement(s, xc), v);
    lp.Encode("Y", CommutantElement(s, yc), v);
    EXPECT_LE(EvaluateMargin(lp, v), r.margin + 1e-9);
  }
}

TEST(SolveFeasibilityTest, VerdictInvariantUnderConstantScaling) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 15; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 1, 2);
    auto p = RandomPlant(rng, s, {1, 1, 1, 1});
    const bool base = SolveFeasibility(BuildUnconstrainedLmis(p)).feasible();
    // Scaling B2 and C2 by sqrt(alpha) scales the constant terms by alpha.
    p.B2 *= std::sqrt(10.0);
    p.C2 *= std::sqrt(10.0);
    EXPECT_EQ(SolveFeasibility(BuildUnconstrainedLmis(p)).feasible(), base);
  }
}

TEST(SolveFeasibilityTest, Deterministic) {
  std::mt19937_64 rng(4);
  const auto p =
      RandomPlant(rng, MakeBlockStructure({{1, 2}, {2, 1}}), {1, 1, 1, 1});
  const LmiProblem lp = BuildPerformanceLmis(p);
  const auto a = SolveFeasibility(lp), b = SolveFeasibility(lp);
  EXPECT_TRUE(a.assignment == b.assignment);
  EXPECT_EQ(a.margin, b.margin);
}

TEST(SolveFeasibilityTest, FixedCoordinatesStayFixed) {
  PartitionedSystem p = ScalarPlant(0.5, 1, 1);
  p.B1 = Scalar(0.1);
  p.C1 = Scalar(0.1);
  p.D11 = Scalar(0.1);
  p.D12 = Scalar(0);
  p.D21 = Scalar(0);
  LmiProblem lp = BuildAdjustedLmis(p, {true, 1, 1});
  const int mu = lp.group("mu").offset;
  lp.FixCoordinate(mu, 2.5);
  const auto r = SolveFeasibility(lp);
  EXPECT_EQ(r.assignment(mu), 2.5);
  EXPECT_TRUE(r.feasible());
}

TEST(SolveFeasibilityTest, StepCapWithoutVerdictTimesOut) {
  SolverOptions o;
  o.max_iter = 1;
  try {
    SolveFeasibility(ScalarFamily(3.0), o);
    FAIL() << "expected SolverTimeoutError";
  } catch (const SolverTimeoutError& e) {
    EXPECT_LT(e.best_margin(), o.margin_tol);
  }
}

TEST(MinimizeLinearTest, ReachesBoundaryShiftedByMargin) {
  LmiProblem lp;
  lp.AddScalarVariable("x");
  AffineMatrixExpr e(Scalar(-2));
  e += lp.ScalarTerm("x", Scalar(1));
  lp.AddConstraint("x<2", std::move(e));
  const auto r = MinimizeLinear(lp, -VectorXd::Ones(1), 0.5, VectorXd::Zero(1));
  EXPECT_NEAR(r.assignment(0), 1.5, 1e-6);
  EXPECT_THROW(
      MinimizeLinear(lp, -VectorXd::Ones(1), 0.5, VectorXd::Constant(1, 1.9)),
      std::invalid_argument);
}

TEST(MinimizeLinearTest, NonstrictConstraintsHaveNoMargin) {
  LmiProblem lp;
  lp.AddScalarVariable("x");
  AffineMatrixExpr e(Scalar(-2));
  e += lp.ScalarTerm("x", Scalar(1));
  lp.AddConstraint("x<=2", std::move(e), false);
  const auto r = MinimizeLinear(lp, -VectorXd::Ones(1), 0.5, VectorXd::Zero(1));
  EXPECT_NEAR(r.assignment(0), 2.0, 1e-6);
}

}  // namespace
}  // namespace lft
