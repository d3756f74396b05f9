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
using testing::RandomSpd;
using testing::ScalarPlant;

MatrixXd Scalar(double x) { return MatrixXd::Constant(1, 1, x); }

double LambdaMax(const MatrixXd& s) {
  if (s.size() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().maxCoeff();
}

// Margin of the constraint with the given label.
double LabelMargin(const LmiProblem& lp, const VectorXd& v,
                   const std::string& label) {
  const auto margins = ConstraintMargins(lp, v);
  for (size_t i = 0; i < margins.size(); ++i) {
    if (lp.constraints()[i].label == label) return margins[i];
  }
  return std::numeric_limits<double>::infinity();
}

CommutantElement RandomPd(std::mt19937_64& rng, const BlockStructure& s) {
  std::vector<MatrixXd> cores;
  for (const auto& b : s.blocks()) {
    cores.push_back(b.n > 0 ? RandomSpd(rng, b.n) : MatrixXd(0, 0));
  }
  return CommutantElement(s, cores);
}

TEST(KernelBasisTest, Examples) {
  MatrixXd m(1, 2);
  m << 1, 0;
  const MatrixXd n = KernelBasis(m);
  ASSERT_EQ(n.cols(), 1);
  EXPECT_NEAR(std::abs(n(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(n(0, 0), 0.0, 1e-15);
  EXPECT_EQ(KernelBasis(MatrixXd::Identity(2, 2)).cols(), 0);
}

TEST(KernelBasisTest, RandomRankTwoMatrix) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd m = RandomMatrix(rng, 2, 4);
    const MatrixXd n = KernelBasis(m);
    ASSERT_EQ(n.cols(), 2);
    EXPECT_LE((m * n).norm(), 1e-10);
    EXPECT_TRUE((n.transpose() * n).isIdentity(1e-12));
  }
  const MatrixXd low = RandomMatrix(rng, 3, 1) * RandomMatrix(rng, 1, 5);
  EXPECT_EQ(KernelBasis(low).cols(), 4);
}

TEST(SchurTest, Examples) {
  MatrixXd s(2, 2);
  s << 2, 1, 1, 1;
  EXPECT_NEAR(SchurComplement(s, 1)(0, 0), 1.0, 1e-15);
  MatrixXd bd = MatrixXd::Zero(3, 3);
  bd.topLeftCorner(2, 2) << 1, 2, 2, 5;
  bd(2, 2) = 4;
  EXPECT_TRUE(SchurComplement(bd, 1).isApprox(bd.topLeftCorner(2, 2)));
  MatrixXd sing = MatrixXd::Ones(2, 2);
  sing(1, 1) = 0;
  EXPECT_THROW(SchurComplement(sing, 1), std::domain_error);
}

TEST(SchurTest, DefinitenessPredicateMatchesEigenvalues) {
  std::mt19937_64 rng(2);
  int agree = 0;
  for (int t = 0; t < 50; ++t) {
    MatrixXd g = RandomMatrix(rng, 6, 6);
    MatrixXd s = -(g * g.transpose()) + (t % 3) * MatrixXd::Identity(6, 6);
    s = 0.5 * (s + s.transpose()).eval();
    const bool direct = LambdaMax(s) < 0;
    bool schur = false;
    try {
      schur = IsNegativeDefiniteBySchur(s, 3);
    } catch (const std::domain_error&) {
      schur = false;
    }
    if (schur == direct) ++agree;
  }
  EXPECT_EQ(agree, 50);
}

TEST(PerformanceLmisTest, MatchesDirectConstruction) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 2, 2);
    const auto p = RandomPlant(rng, s, {2, 1, 2, 1});
    const LmiProblem lp = BuildPerformanceLmis(p);
    const CommutantElement x = RandomPd(rng, s), y = RandomPd(rng, s);
    VectorXd v(lp.num_variables());
    lp.Encode("X", x, v);
    lp.Encode("Y", y, v);
    const MatrixXd xa = x.Assemble(), ya = y.Assemble();
    const int n = p.n();
    // Y side over rows [x; y1; u1].
    MatrixXd bt(1, n + 2);
    bt << p.B2.transpose(), p.D12.transpose();
    MatrixXd nc = KernelBasis(bt);
    MatrixXd ac(n + 2, n);
    ac << p.A, p.C1;
    MatrixXd wy = ac * ya * ac.transpose();
    wy.topLeftCorner(n, n) -= ya;
    wy.bottomRightCorner(2, 2) -= MatrixXd::Identity(2, 2);
    MatrixXd bd(n + 2, 2);
    bd << p.B1, p.D11;
    MatrixXd fy(n + 4, n + 4);
    fy << wy, bd, bd.transpose(), -MatrixXd::Identity(2, 2);
    MatrixXd ty = MatrixXd::Zero(n + 4, nc.cols() + 2);
    ty.topLeftCorner(n + 2, nc.cols()) = nc;
    ty.bottomRightCorner(2, 2).setIdentity();
    EXPECT_NEAR(LabelMargin(lp, v, "Y-LMI"),
                -LambdaMax(ty.transpose() * fy * ty), 1e-9 * (1 + fy.norm()));
    // X side over rows [x; u1; y1].
    MatrixXd cd(1, n + 2);
    cd << p.C2, p.D21;
    MatrixXd no = KernelBasis(cd);
    MatrixXd ab(n, n + 2);
    ab << p.A, p.B1;
    MatrixXd wx = ab.transpose() * xa * ab;
    wx.topLeftCorner(n, n) -= xa;
    wx.bottomRightCorner(2, 2) -= MatrixXd::Identity(2, 2);
    MatrixXd cdt(n + 2, 2);
    cdt << p.C1.transpose(), p.D11.transpose();
    MatrixXd fx(n + 4, n + 4);
    fx << wx, cdt, cdt.transpose(), -MatrixXd::Identity(2, 2);
    MatrixXd tx = MatrixXd::Zero(n + 4, no.cols() + 2);
    tx.topLeftCorner(n + 2, no.cols()) = no;
    tx.bottomRightCorner(2, 2).setIdentity();
    EXPECT_NEAR(LabelMargin(lp, v, "X-LMI"),
                -LambdaMax(tx.transpose() * fx * tx), 1e-9 * (1 + fx.norm()));
  }
}

TEST(PerformanceLmisTest, ZeroPlantHoldsAtIdentity) {
  PartitionedSystem p = ScalarPlant(0, 0, 0);
  p.B1 = Scalar(0);
  p.C1 = Scalar(0);
  p.D11 = Scalar(0);
  p.D12 = Scalar(0);
  p.D21 = Scalar(0);
  const LmiProblem lp = BuildPerformanceLmis(p);
  VectorXd v(lp.num_variables());
  lp.Encode("X", CommutantElement::Identity(p.structure), v);
  lp.Encode("Y", CommutantElement::Identity(p.structure), v);
  EXPECT_NEAR(EvaluateMargin(lp, v), 1.0, 1e-12);
}

TEST(PerformanceLmisTest, ScalarPlantFeasibleByGridSearch) {
  PartitionedSystem p = ScalarPlant(0.9, 1, 1);
  p.B1 = Scalar(0.1);
  p.C1 = Scalar(0.1);
  p.D11 = Scalar(0);
  p.D12 = Scalar(0);
  p.D21 = Scalar(0);
  const LmiProblem lp = BuildPerformanceLmis(p);
  // Independent scalar evaluation of both compressed inequalities: with
  // B2 = C2 = 1 the kernels keep only the performance rows, so the Y side is
  // [0.01 Y - 1, 0; 0, -1] and the X side [0.01 X - 1, 0; 0, -1].
  double best = -1;
  for (int i = 1; i <= 100; ++i) {
    for (int j = 1; j <= 100; ++j) {
      const double x = 0.1 * i, y = 0.1 * j;
      const double direct = std::min({1 - 0.01 * y, 1 - 0.01 * x, 1.0, x, y});
      VectorXd v(2);
      v << x, y;
      EXPECT_NEAR(EvaluateMargin(lp, v), std::min(direct, 1.0), 1e-12);
      best = std::max(best, direct);
    }
  }
  EXPECT_GT(best, 0);
  EXPECT_TRUE(SolveFeasibility(lp).feasible());
}

TEST(PerformanceLmisTest, RejectsNonSquareChannel) {
  std::mt19937_64 rng(4);
  const auto p = RandomPlant(rng, MakeBlockStructure({{1, 1}}), {2, 1, 1, 1});
  EXPECT_THROW(BuildPerformanceLmis(p), DimensionError);
}

TEST(StabilizationLmisTest, InvertibleB2MakesYSideVacuous) {
  const LmiProblem lp = BuildStabilizationLmis(ScalarPlant(2, 1, 0));
  for (const auto& c : lp.constraints()) EXPECT_NE(c.label, "Y-LMI");
  bool has_x = false;
  for (const auto& c : lp.constraints()) has_x |= c.label == "X-LMI";
  EXPECT_TRUE(has_x);
}

TEST(StabilizationLmisTest, ZeroStateMatrixHoldsForAnyPositivePair) {
  std::mt19937_64 rng(5);
  const auto s = MakeBlockStructure({{1, 2}, {2, 1}});
  auto p = RandomPlant(rng, s, {1, 1, 1, 1});
  p.A.setZero();
  const LmiProblem lp = BuildStabilizationLmis(p);
  for (int t = 0; t < 10; ++t) {
    VectorXd v(lp.num_variables());
    lp.Encode("X", RandomPd(rng, s), v);
    lp.Encode("Y", RandomPd(rng, s), v);
    EXPECT_GT(EvaluateMargin(lp, v), 0);
  }
}

TEST(StabilizationLmisTest, ScalarUnstabilizableFamily) {
  const LmiProblem lp = BuildStabilizationLmis(ScalarPlant(2, 0, 1));
  VectorXd v(2);
  v << 1.0, 1.0;
  EXPECT_NEAR(LabelMargin(lp, v, "Y-LMI"), -3.0, 1e-12);
  EXPECT_FALSE(SolveFeasibility(lp).feasible());
}

TEST(UnconstrainedLmisTest, ScalarExamples) {
  {
    const LmiProblem lp = BuildUnconstrainedLmis(ScalarPlant(0.5, 0, 0));
    VectorXd v(2);
    v << 1.0, 1.0;
    EXPECT_NEAR(EvaluateMargin(lp, v), 0.75, 1e-12);
  }
  {
    const LmiProblem lp = BuildUnconstrainedLmis(ScalarPlant(2, 1, 1));
    VectorXd v(2);
    v << 0.25, 0.2;
    EXPECT_NEAR(LabelMargin(lp, v, "X-LMI"), 1 - 3 * 0.25, 1e-12);
    EXPECT_NEAR(LabelMargin(lp, v, "Y-LMI"), 1 - 3 * 0.2, 1e-12);
    const auto r = SolveFeasibility(lp);
    ASSERT_TRUE(r.feasible());
    EXPECT_LT(lp.StructuredValue("X", r.assignment).core(0)(0, 0), 1.0 / 3);
    EXPECT_LT(lp.StructuredValue("Y", r.assignment).core(0)(0, 0), 1.0 / 3);
  }
  EXPECT_FALSE(SolveFeasibility(BuildUnconstrainedLmis(ScalarPlant(2, 1, 0)))
                   .feasible());
}

TEST(AdjustedLmisTest, ZeroPlantFeasibleAtUnitValues) {
  PartitionedSystem p = ScalarPlant(0, 0, 0);
  p.B1 = Scalar(0);
  p.C1 = Scalar(0);
  p.D11 = Scalar(0);
  p.D12 = Scalar(0);
  p.D21 = Scalar(0);
  for (bool free : {false, true}) {
    const LmiProblem lp = BuildAdjustedLmis(p, {free, 1.0, 1.0});
    VectorXd v = VectorXd::Ones(lp.num_variables());
    EXPECT_GT(EvaluateMargin(lp, v), 0);
  }
}

TEST(AdjustedLmisTest, FixedScalingAgreesWithPerformanceConditions) {
  std::mt19937_64 rng(6);
  int agree = 0;
  for (int t = 0; t < 20; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 1, 2);
    const auto p = RandomPlant(rng, s, {1, 1, 1, 1}, 0.7);
    const bool a = SolveFeasibility(BuildPerformanceLmis(p)).feasible();
    const bool b = SolveFeasibility(BuildAdjustedLmis(p)).feasible();
    if (a == b) ++agree;
  }
  EXPECT_EQ(agree, 20);
}

TEST(AdjustedLmisTest, FreeScalingRescalesToUnitScaling) {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int t = 0; t < 20; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 1, 2);
    const auto p = RandomPlant(rng, s, {1, 1, 1, 1}, 0.6);
    const LmiProblem free = BuildAdjustedLmis(p, {true, 1, 1});
    const auto r = SolveFeasibility(free);
    if (!r.feasible()) continue;
    ++checked;
    const double mu = free.ScalarValue("mu", r.assignment);
    const double mut = free.ScalarValue("mu_tilde", r.assignment);
    const LmiProblem fixed = BuildAdjustedLmis(p);
    VectorXd v(fixed.num_variables());
    fixed.Encode("X", free.StructuredValue("X", r.assignment).Scaled(1 / mut),
                 v);
    fixed.Encode("Y", free.StructuredValue("Y", r.assignment).Scaled(1 / mu),
                 v);
    EXPECT_GT(EvaluateMargin(fixed, v), 0);
  }
  EXPECT_GT(checked, 0);
}

TEST(LmiHomogeneityTest, ScalingAssignmentScalesMargin) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto s = testing::RandomStructure(rng, 2, 2, 2);
    auto p = RandomPlant(rng, s, {1, 1, 1, 1});
    p.A *= 0.5 / testing::Norm2(p.A);
    const LmiProblem lp = BuildStabilizationLmis(p);
    VectorXd v(lp.num_variables());
    lp.Encode("X", CommutantElement::Identity(s), v);
    lp.Encode("Y", CommutantElement::Identity(s), v);
    const double m = EvaluateMargin(lp, v);
    ASSERT_GT(m, 0);
    for (double alpha : {0.1, 3.0, 250.0}) {
      EXPECT_NEAR(EvaluateMargin(lp, alpha * v), alpha * m, 1e-9 * alpha);
    }
  }
}

TEST(CouplingRankTest, InversePairHasRankN) {
  std::mt19937_64 rng(9);
  const auto s = MakeBlockStructure({{1, 3}, {2, 2}});
  const CommutantElement x = RandomPd(rng, s);
  const auto reps = CouplingRank(x, x.Inverse(), StaticDims(s));
  ASSERT_EQ(reps.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(reps[k].rank, s.block(k).n);
    EXPECT_TRUE(reps[k].psd);
    EXPECT_TRUE(reps[k].passes);
    EXPECT_EQ(reps[k].minimal_ctrl_dim, 0);
  }
}

TEST(CouplingRankTest, ScalarExamples) {
  const auto s = MakeBlockStructure({{1, 1}});
  const CommutantElement two(s, {Scalar(2)});
  auto reps = CouplingRank(two, two, StaticDims(s));
  EXPECT_EQ(reps[0].rank, 2);
  EXPECT_TRUE(reps[0].psd);
  EXPECT_FALSE(reps[0].passes);
  EXPECT_EQ(reps[0].minimal_ctrl_dim, 1);
  EXPECT_TRUE(CouplingRank(two, two, PrescribedDims({1}))[0].passes);
  EXPECT_TRUE(CouplingRank(two, two, UnconstrainedDims(s))[0].passes);

  reps = CouplingRank(CommutantElement(s, {Scalar(1)}),
                      CommutantElement(s, {Scalar(0.5)}), UnconstrainedDims(s));
  EXPECT_FALSE(reps[0].psd);
  EXPECT_FALSE(reps[0].passes);
  EXPECT_LT(reps[0].min_eigenvalue, 0);
}

TEST(CouplingRankTest, RejectsIndefiniteInput) {
  const auto s = MakeBlockStructure({{1, 1}});
  EXPECT_THROW(CouplingRank(CommutantElement(s, {Scalar(-1)}),
                            CommutantElement(s, {Scalar(1)}), StaticDims(s)),
               std::invalid_argument);
}

TEST(CouplingRankTest, PsdIffSchurComplementPsd) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 100; ++t) {
    const int n = testing::UniformInt(rng, 1, 4);
    const auto s = MakeBlockStructure({{1, n}});
    const MatrixXd x = RandomSpd(rng, n);
    MatrixXd y = RandomSpd(rng, n);
    if (t % 2 == 0) y = (x.inverse() + 0.05 * RandomSpd(rng, n)).inverse();
    const auto rep =
        CouplingRank(CommutantElement(s, {x}), CommutantElement(s, {y}),
                     UnconstrainedDims(s))[0];
    const double schur =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(x - y.inverse())
            .eigenvalues()
            .minCoeff();
    EXPECT_EQ(rep.psd, schur >= -1e-10) << "trial " << t;
  }
}

TEST(CouplingConstraintTest, LabelsAndSign) {
  LmiProblem lp;
  const auto s = MakeBlockStructure({{1, 1}, {1, 0}, {2, 2}});
  lp.AddStructuredVariable("X", s);
  lp.AddStructuredVariable("Y", s);
  AddCouplingConstraints(lp, "X", "Y");
  ASSERT_EQ(lp.constraints().size(), 2u);
  EXPECT_EQ(lp.constraints()[0].label, "coupling:k=1");
  EXPECT_EQ(lp.constraints()[1].label, "coupling:k=3");
  VectorXd v(lp.num_variables());
  lp.Encode("X", CommutantElement::Identity(s).Scaled(2), v);
  lp.Encode("Y", CommutantElement::Identity(s).Scaled(2), v);
  EXPECT_NEAR(EvaluateMargin(lp, v), 1.0, 1e-12);
}

TEST(AffineExprTest, EvaluateAndCongruence) {
  std::mt19937_64 rng(11);
  LmiProblem lp;
  const auto s = MakeBlockStructure({{1, 2}});
  lp.AddStructuredVariable("X", s);
  const MatrixXd a = RandomMatrix(rng, 2, 2);
  AffineMatrixExpr e = lp.Linear(
      "X", [&](const MatrixXd& x) { return MatrixXd(a * x * a.transpose()); });
  const CommutantElement x = RandomPd(rng, s);
  VectorXd v(lp.num_variables());
  lp.Encode("X", x, v);
  EXPECT_TRUE(e.Evaluate(v).isApprox(a * x.Assemble() * a.transpose(), 1e-12));
  const MatrixXd t = RandomMatrix(rng, 2, 1);
  EXPECT_TRUE(e.Congruence(t).Evaluate(v).isApprox(
      t.transpose() * a * x.Assemble() * a.transpose() * t, 1e-12));
  EXPECT_TRUE(lp.StructuredValue("X", v).Assemble().isApprox(x.Assemble()));
}

TEST(LmiProblemTest, CoordinateLabels) {
  LmiProblem lp;
  lp.AddStructuredVariable("X", MakeBlockStructure({{1, 2}}));
  lp.AddScalarVariable("mu");
  EXPECT_EQ(lp.CoordinateLabel(0).rfind("X:k=1", 0), 0u);
  EXPECT_EQ(lp.CoordinateLabel(3), "mu");
  EXPECT_THROW(lp.AddScalarVariable("mu"), std::invalid_argument);
}

}  // namespace
}  // namespace lft
