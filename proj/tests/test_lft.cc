#include <gtest/gtest.h>

#include "lft/errors.h"
#include "lft/lft.h"
#include "test_util.h"

namespace lft {
namespace {

using Eigen::MatrixXd;
using testing::RandomController;
using testing::RandomMatrix;
using testing::RandomPlant;
using testing::RandomStructure;

MatrixXd Scalar(double x) { return MatrixXd::Constant(1, 1, x); }

SystemMatrix RandomSystem(std::mt19937_64& rng, int n, int p, int q,
                          double scale = 1.0) {
  return {RandomMatrix(rng, n, n, scale), RandomMatrix(rng, n, p, scale),
          RandomMatrix(rng, q, n, scale), RandomMatrix(rng, q, p, scale)};
}

TEST(UpperLftTest, ZeroLoadGivesFeedthrough) {
  std::mt19937_64 rng(1);
  const SystemMatrix m = RandomSystem(rng, 3, 2, 2);
  EXPECT_TRUE(UpperLft(m, MatrixXd::Zero(3, 3)).isApprox(m.D));
}

TEST(UpperLftTest, ScalarExample) {
  const SystemMatrix m{Scalar(0.5), Scalar(1), Scalar(1), Scalar(0)};
  EXPECT_NEAR(UpperLft(m, Scalar(1))(0, 0), 2.0, 1e-15);
}

TEST(UpperLftTest, MatchesNeumannSeriesForContractions) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    SystemMatrix m = RandomSystem(rng, 4, 2, 3);
    m.A *= 0.8 / testing::Norm2(m.A);
    MatrixXd series = m.D;
    MatrixXd power = MatrixXd::Identity(4, 4);
    for (int j = 1; j <= 200; ++j) {
      series += m.C * power * m.B;
      power = power * m.A;
    }
    EXPECT_LE((UpperLft(m, MatrixXd::Identity(4, 4)) - series).norm(), 1e-10);
  }
}

TEST(UpperLftTest, SingularLoopIsIllPosed) {
  const SystemMatrix m{Scalar(2), Scalar(1), Scalar(1), Scalar(0)};
  try {
    UpperLft(m, Scalar(0.5));
    FAIL() << "expected IllPosedError";
  } catch (const IllPosedError& e) {
    EXPECT_LE(e.sigma_min(), 1e-12);
  }
  EXPECT_THROW(UpperLft(m, MatrixXd::Zero(2, 2)), DimensionError);
}

TEST(UpperLftTest, SucceedsInsideSmallGainRadius) {
  std::mt19937_64 rng(3);
  const auto s = MakeBlockStructure({{2, 1}, {1, 2}});
  for (int t = 0; t < 20; ++t) {
    const SystemMatrix m = RandomSystem(rng, s.total_dim(), 2, 2);
    const double r = 0.99 / testing::Norm2(m.A);
    const auto d = SampleUncertainty(s, r, rng);
    EXPECT_NO_THROW(UpperLft(m, d.assembled));
  }
}

TEST(LowerLftTest, ZeroLoadAndScalarExample) {
  std::mt19937_64 rng(4);
  const SystemMatrix m = RandomSystem(rng, 2, 3, 3);
  EXPECT_TRUE(LowerLft(m, MatrixXd::Zero(3, 3)).isApprox(m.A));
  const SystemMatrix s{Scalar(0), Scalar(1), Scalar(1), Scalar(0.5)};
  EXPECT_NEAR(LowerLft(s, Scalar(1))(0, 0), 2.0, 1e-15);
  const SystemMatrix bad{Scalar(0), Scalar(1), Scalar(1), Scalar(1)};
  EXPECT_THROW(LowerLft(bad, Scalar(1)), IllPosedError);
}

TEST(LowerLftTest, EqualsUpperLftOfSwappedSystem) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const SystemMatrix m = RandomSystem(rng, 3, 2, 2, 0.4);
    const MatrixXd d = RandomMatrix(rng, 2, 2, 0.4);
    const SystemMatrix swapped{m.D, m.C, m.B, m.A};
    EXPECT_LE((LowerLft(m, d) - UpperLft(swapped, d)).norm(), 1e-12);
  }
}

TEST(LowerLftTest, RectangularOuterChannel) {
  std::mt19937_64 rng(6);
  SystemMatrix m{RandomMatrix(rng, 1, 3), RandomMatrix(rng, 1, 2),
                 RandomMatrix(rng, 2, 3), RandomMatrix(rng, 2, 2, 0.3)};
  const MatrixXd d = RandomMatrix(rng, 2, 2, 0.3);
  const MatrixXd expected =
      m.A + m.B * (MatrixXd::Identity(2, 2) - d * m.D).inverse() * d * m.C;
  EXPECT_LE((LowerLft(m, d) - expected).norm(), 1e-12);
  m.C = RandomMatrix(rng, 1, 3);
  EXPECT_THROW(LowerLft(m, d), DimensionError);
}

TEST(CloseLoopTest, ZeroControllerKeepsPerformanceChannel) {
  std::mt19937_64 rng(6);
  const auto s = MakeBlockStructure({{1, 2}, {2, 1}});
  const auto plant = RandomPlant(rng, s, {2, 1, 2, 1});
  const ClosedLoop cl = CloseLoop(plant, Controller::Zero(plant, {0, 0}));
  EXPECT_TRUE(cl.system.A == plant.A);
  EXPECT_TRUE(cl.system.B == plant.B1);
  EXPECT_TRUE(cl.system.C == plant.C1);
  EXPECT_TRUE(cl.system.D == plant.D11);
}

TEST(CloseLoopTest, StaticControllerMatchesExplicitFormula) {
  std::mt19937_64 rng(7);
  const auto s = MakeBlockStructure({{1, 3}});
  const auto plant = RandomPlant(rng, s, {2, 2, 2, 1});
  const MatrixXd dk = RandomMatrix(rng, 2, 1);
  const ClosedLoop cl = CloseLoop(plant, Controller::Static(plant, dk));
  EXPECT_TRUE(cl.system.A == plant.A + plant.B2 * dk * plant.C2);
  EXPECT_TRUE(cl.system.D == plant.D11 + plant.D12 * dk * plant.D21);
}

TEST(CloseLoopTest, DynamicControllerMatchesBlockFormulaExactly) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto s = RandomStructure(rng, 3, 2, 2);
    const auto plant = RandomPlant(rng, s, {2, 1, 2, 2});
    std::vector<int> dims;
    for (int k = 0; k < s.num_blocks(); ++k)
      dims.push_back(testing::UniformInt(rng, 0, 2));
    const Controller k = RandomController(rng, plant, dims);
    const ClosedLoop cl = CloseLoop(plant, k);
    const int n = plant.n(), nk = k.states();
    MatrixXd a(n + nk, n + nk);
    a << plant.A + plant.B2 * k.DK * plant.C2, plant.B2 * k.CK, k.BK * plant.C2,
        k.AK;
    MatrixXd b(n + nk, 2);
    b << plant.B1 + plant.B2 * k.DK * plant.D21, k.BK * plant.D21;
    MatrixXd c(2, n + nk);
    c << plant.C1 + plant.D12 * k.DK * plant.C2, plant.D12 * k.CK;
    EXPECT_TRUE(cl.system.A == a);
    EXPECT_TRUE(cl.system.B == b);
    EXPECT_TRUE(cl.system.C == c);
    EXPECT_EQ(cl.merged_structure().total_dim(), n + nk);
  }
}

TEST(CloseLoopTest, NonzeroFeedthroughMatchesEliminatedLoop) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto s = MakeBlockStructure({{1, 2}, {2, 1}});
    auto plant = RandomPlant(rng, s, {1, 2, 1, 2});
    plant.D22 = RandomMatrix(rng, 2, 2, 0.3);
    const Controller k = RandomController(rng, plant, {1, 1}, 0.5);
    const ClosedLoop cl = CloseLoop(plant, k);
    // u2 = (I - DK D22)^{-1} (DK C2 x + DK D21 u1 + CK xK).
    const MatrixXd r = (MatrixXd::Identity(2, 2) - k.DK * plant.D22).inverse();
    const MatrixXd ux = r * k.DK * plant.C2, uk = r * k.CK,
                   uu = r * k.DK * plant.D21;
    const MatrixXd yx = plant.C2 + plant.D22 * ux, yk = plant.D22 * uk,
                   yu = plant.D21 + plant.D22 * uu;
    const int n = plant.n(), nk = k.states();
    MatrixXd a(n + nk, n + nk);
    a << plant.A + plant.B2 * ux, plant.B2 * uk, k.BK * yx, k.AK + k.BK * yk;
    MatrixXd b(n + nk, 1);
    b << plant.B1 + plant.B2 * uu, k.BK * yu;
    EXPECT_LE((cl.system.A - a).norm(), 1e-10 * (1 + a.norm()));
    EXPECT_LE((cl.system.B - b).norm(), 1e-10 * (1 + b.norm()));
    EXPECT_LE((cl.system.D - (plant.D11 + plant.D12 * uu)).norm(), 1e-10);
  }
}

TEST(CloseLoopTest, IllPosedFeedthroughLoopThrows) {
  auto plant = testing::ScalarPlant(0.5, 1, 1);
  plant.D22 = Scalar(1);
  EXPECT_THROW(CloseLoop(plant, Controller::Static(plant, Scalar(1))),
               IllPosedError);
}

TEST(CloseLoopTest, StarProductEquivalence) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const auto s = RandomStructure(rng, 3, 2, 2);
    const auto plant = RandomPlant(rng, s, {2, 1, 2, 1}, 0.4);
    std::vector<int> dims;
    for (int k = 0; k < s.num_blocks(); ++k)
      dims.push_back(testing::UniformInt(rng, 0, 2));
    const Controller k = RandomController(rng, plant, dims, 0.4);
    const ClosedLoop cl = CloseLoop(plant, k);
    const int n = plant.n(), nk = k.states();
    for (int i = 0; i < 20; ++i) {
      const auto d = SampleUncertainty(s, 0.5, rng);
      const MatrixXd dk = AssembleUncertainty(k.structure, d.cores);
      MatrixXd dcl = MatrixXd::Zero(n + nk, n + nk);
      dcl.topLeftCorner(n, n) = d.assembled;
      dcl.bottomRightCorner(nk, nk) = dk;
      const MatrixXd f1 = UpperLft(cl.system, dcl);
      const MatrixXd g = UpperLft(plant.FullModel().system, d.assembled);
      const SystemMatrix gs{g.topLeftCorner(2, 2), g.topRightCorner(2, 1),
                            g.bottomLeftCorner(1, 2),
                            g.bottomRightCorner(1, 1)};
      const MatrixXd f2 = LowerLft(gs, UpperLft(k.AsSystem(), dk));
      EXPECT_LE((f1 - f2).norm(), 1e-9 * std::max(1.0, f1.norm()));
      // The merged realization evaluates identically on the merged load.
      const LftModel merged = cl.MergedModel();
      const MatrixXd f3 = UpperLft(merged.system, cl.permutation.ToMerged(dcl));
      EXPECT_LE((f1 - f3).norm(), 1e-9 * std::max(1.0, f1.norm()));
    }
  }
}

TEST(AugmentTest, OneStateOneChannel) {
  const LftModel m{{Scalar(0.3), Scalar(1), Scalar(1), Scalar(0.2)},
                   MakeBlockStructure({{1, 1}})};
  const LftModel aug = Augment(m);
  EXPECT_EQ(aug.system.A.rows(), 2);
  EXPECT_EQ(aug.system.inputs(), 0);
  EXPECT_EQ(aug.structure.num_blocks(), 2);
  EXPECT_TRUE(aug.structure.block(1).full);
  EXPECT_EQ(aug.structure.total_dim(), 2);
  EXPECT_TRUE(aug.system.A == m.system.Stacked());
}

TEST(AugmentTest, NonSquareChannelThrows) {
  const LftModel m{{Scalar(0.3), MatrixXd::Ones(1, 2), MatrixXd::Ones(1, 1),
                    MatrixXd::Zero(1, 2)},
                   MakeBlockStructure({{1, 1}})};
  EXPECT_THROW(Augment(m), DimensionError);
}

TEST(AdjustTest, ZeroPlantGivesZeroModel) {
  PartitionedSystem p;
  p.structure = MakeBlockStructure({{1, 2}});
  p.A = MatrixXd::Zero(2, 2);
  p.B1 = MatrixXd::Zero(2, 1);
  p.B2 = MatrixXd::Zero(2, 1);
  p.C1 = MatrixXd::Zero(1, 2);
  p.C2 = MatrixXd::Zero(1, 2);
  p.D11 = p.D12 = p.D21 = p.D22 = MatrixXd::Zero(1, 1);
  const auto adj = Adjust(p);
  EXPECT_EQ(adj.n(), 3);
  EXPECT_TRUE(adj.A.isZero(0));
  EXPECT_EQ(adj.p1(), 0);
  EXPECT_EQ(adj.q1(), 0);
  EXPECT_EQ(adj.structure.total_dim(), p.structure.total_dim() + 1);
}

TEST(AdjustTest, RejectsFeedthroughAndNonSquareChannel) {
  std::mt19937_64 rng(11);
  auto p = RandomPlant(rng, MakeBlockStructure({{1, 1}}), {1, 1, 1, 1});
  p.D22 = Scalar(0.1);
  EXPECT_THROW(Adjust(p), UnsupportedError);
  const auto q = RandomPlant(rng, MakeBlockStructure({{1, 1}}), {2, 1, 1, 1});
  EXPECT_THROW(Adjust(q), DimensionError);
}

TEST(AdjustTest, StaticClosedLoopIsSimilarToSystemMatrix) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto s = RandomStructure(rng, 2, 2, 2);
    const auto plant = RandomPlant(rng, s, {2, 1, 2, 1});
    const MatrixXd dk = RandomMatrix(rng, 1, 1);
    const auto adj = Adjust(plant);
    const MatrixXd a_adj = CloseLoop(adj, Controller::Static(adj, dk)).system.A;
    const MatrixXd stacked =
        CloseLoop(plant, Controller::Static(plant, dk)).system.Stacked();
    Eigen::VectorXcd e1 = a_adj.eigenvalues(), e2 = stacked.eigenvalues();
    auto key = [](const std::complex<double>& a,
                  const std::complex<double>& b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    };
    std::sort(e1.data(), e1.data() + e1.size(), key);
    std::sort(e2.data(), e2.data() + e2.size(), key);
    EXPECT_LE((e1 - e2).norm(), 1e-10 * (1 + stacked.norm()));
  }
}

TEST(AdjustTest, DynamicClosedLoopIsRearrangedSystemMatrix) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto s = RandomStructure(rng, 2, 2, 2);
    const auto plant = RandomPlant(rng, s, {2, 1, 2, 1});
    std::vector<int> dims;
    for (int k = 0; k < s.num_blocks(); ++k)
      dims.push_back(testing::UniformInt(rng, 0, 2));
    const Controller k = RandomController(rng, plant, dims);
    const auto adj = Adjust(plant);
    std::vector<int> adj_dims = dims;
    adj_dims.push_back(0);
    Controller ka = Controller::Zero(adj, adj_dims);
    ka.AK = k.AK;
    ka.BK = k.BK;
    ka.CK = k.CK;
    ka.DK = k.DK;
    const MatrixXd a_adj = CloseLoop(adj, ka).system.A;
    const MatrixXd stacked = CloseLoop(plant, k).system.Stacked();
    const auto order = AdjustedClosedLoopOrder(plant.n(), 2, k.states());
    const int dim = static_cast<int>(order.size());
    ASSERT_EQ(dim, stacked.rows());
    MatrixXd permuted(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) permuted(i, j) = a_adj(order[i], order[j]);
    }
    EXPECT_TRUE(permuted == stacked);
  }
}

TEST(PartitionedSystemTest, ValidateCatchesMismatches) {
  std::mt19937_64 rng(14);
  auto p = RandomPlant(rng, MakeBlockStructure({{1, 2}}), {1, 1, 1, 1});
  EXPECT_NO_THROW(p.Validate());
  p.B2 = MatrixXd::Zero(3, 1);
  EXPECT_THROW(p.Validate(), DimensionError);
  auto q = RandomPlant(rng, MakeBlockStructure({{1, 2}}), {1, 1, 1, 1});
  q.structure = MakeBlockStructure({{1, 3}});
  EXPECT_THROW(q.Validate(), DimensionError);
}

}  // namespace
}  // namespace lft
