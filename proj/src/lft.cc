#include "lft/lft.h"

#include <string>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;

namespace {

std::string Shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void Expect(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void ExpectShape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                 const char* name) {
  Expect(m.rows() == rows && m.cols() == cols,
         std::string(name) + " is " + Shape(m) + ", expected " +
             std::to_string(rows) + "x" + std::to_string(cols));
}

// Solves (I - L K) X = R after checking conditioning of I - L K.
MatrixXd SolveWellPosed(const MatrixXd& i_minus, const MatrixXd& rhs,
                        const char* what) {
  if (i_minus.size() == 0) return MatrixXd::Zero(0, rhs.cols());
  Eigen::JacobiSVD<MatrixXd> svd(i_minus);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0) || smax / smin > kIllPosedCondition) {
    throw IllPosedError(std::string(what) +
                            " is singular or ill-conditioned "
                            "(smallest singular value " +
                            std::to_string(smin) + ")",
                        smin);
  }
  return i_minus.fullPivLu().solve(rhs);
}

MatrixXd Stack(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
               const MatrixXd& d) {
  MatrixXd out(a.rows() + c.rows(), a.cols() + b.cols());
  out << a, b, c, d;
  return out;
}

}  // namespace

void SystemMatrix::Validate() const {
  Expect(A.rows() == A.cols(), "A must be square, is " + Shape(A));
  ExpectShape(B, A.rows(), B.cols(), "B");
  ExpectShape(C, C.rows(), A.cols(), "C");
  ExpectShape(D, C.rows(), B.cols(), "D");
}

MatrixXd SystemMatrix::Stacked() const {
  Validate();
  return Stack(A, B, C, D);
}

void LftModel::Validate() const {
  system.Validate();
  Expect(system.states() == structure.total_dim(),
         "state dimension " + std::to_string(system.states()) +
             " does not match structure dimension " +
             std::to_string(structure.total_dim()));
}

void PartitionedSystem::Validate() const {
  const auto n = A.rows();
  Expect(A.cols() == n, "A must be square, is " + Shape(A));
  Expect(n == structure.total_dim(),
         "state dimension " + std::to_string(n) +
             " does not match structure dimension " +
             std::to_string(structure.total_dim()));
  const auto p1 = B1.cols(), p2 = B2.cols();
  const auto q1 = C1.rows(), q2 = C2.rows();
  ExpectShape(B1, n, p1, "B1");
  ExpectShape(B2, n, p2, "B2");
  ExpectShape(C1, q1, n, "C1");
  ExpectShape(C2, q2, n, "C2");
  ExpectShape(D11, q1, p1, "D11");
  ExpectShape(D12, q1, p2, "D12");
  ExpectShape(D21, q2, p1, "D21");
  ExpectShape(D22, q2, p2, "D22");
}

LftModel PartitionedSystem::PerformanceModel() const {
  Validate();
  return {{A, B1, C1, D11}, structure};
}

LftModel PartitionedSystem::FullModel() const {
  Validate();
  MatrixXd b(n(), p1() + p2());
  b << B1, B2;
  MatrixXd c(q1() + q2(), n());
  c << C1, C2;
  return {{A, b, c, Stack(D11, D12, D21, D22)}, structure};
}

void Controller::Validate(const PartitionedSystem& plant) const {
  const auto nk = AK.rows();
  Expect(AK.cols() == nk, "A_K must be square, is " + Shape(AK));
  ExpectShape(BK, nk, plant.q2(), "B_K");
  ExpectShape(CK, plant.p2(), nk, "C_K");
  ExpectShape(DK, plant.p2(), plant.q2(), "D_K");
  Expect(static_cast<int>(ctrl_dims.size()) == plant.structure.num_blocks(),
         "controller dimensions must have one entry per plant block");
  Expect(structure.total_dim() == nk,
         "controller state dimension " + std::to_string(nk) +
             " does not match sum n_Kk m_k = " +
             std::to_string(structure.total_dim()));
}

Controller Controller::Static(const PartitionedSystem& plant, MatrixXd dk) {
  std::vector<int> dims(plant.structure.num_blocks(), 0);
  Controller k{MatrixXd::Zero(0, 0),
               MatrixXd::Zero(0, plant.q2()),
               MatrixXd::Zero(plant.p2(), 0),
               std::move(dk),
               dims,
               ControllerStructure(plant.structure, dims)};
  k.Validate(plant);
  return k;
}

Controller Controller::Zero(const PartitionedSystem& plant,
                            const std::vector<int>& ctrl_dims) {
  BlockStructure s = ControllerStructure(plant.structure, ctrl_dims);
  const int nk = s.total_dim();
  return Controller{MatrixXd::Zero(nk, nk),
                    MatrixXd::Zero(nk, plant.q2()),
                    MatrixXd::Zero(plant.p2(), nk),
                    MatrixXd::Zero(plant.p2(), plant.q2()),
                    ctrl_dims,
                    std::move(s)};
}

LftModel ClosedLoop::MergedModel() const {
  return {{permutation.ToMerged(system.A), permutation.PermuteRows(system.B),
           permutation.PermuteCols(system.C), system.D},
          permutation.merged()};
}

MatrixXd UpperLft(const SystemMatrix& m, const MatrixXd& delta) {
  m.Validate();
  Expect(delta.rows() == m.A.rows() && delta.cols() == m.A.cols(),
         "load is " + Shape(delta) + ", state matrix is " + Shape(m.A));
  const auto n = m.A.rows();
  const MatrixXd i_minus = MatrixXd::Identity(n, n) - delta * m.A;
  return m.D + m.C * SolveWellPosed(i_minus, delta * m.B, "I - Delta A");
}

MatrixXd LowerLft(const SystemMatrix& m, const MatrixXd& delta) {
  // The outer channel of a lower LFT need not be square.
  ExpectShape(m.B, m.A.rows(), m.B.cols(), "B");
  ExpectShape(m.C, m.C.rows(), m.A.cols(), "C");
  ExpectShape(m.D, m.C.rows(), m.B.cols(), "D");
  Expect(delta.rows() == m.D.cols() && delta.cols() == m.D.rows(),
         "load is " + Shape(delta) + ", expected " +
             std::to_string(m.D.cols()) + "x" + std::to_string(m.D.rows()));
  const auto p = m.D.cols();
  const MatrixXd i_minus = MatrixXd::Identity(p, p) - delta * m.D;
  return m.A + m.B * SolveWellPosed(i_minus, delta * m.C, "I - Delta' D");
}

ClosedLoop CloseLoop(const PartitionedSystem& plant, const Controller& k) {
  plant.Validate();
  k.Validate(plant);
  const int n = plant.n(), nk = k.states();
  const int p1 = plant.p1(), p2 = plant.p2();
  const int q1 = plant.q1(), q2 = plant.q2();

  {
    const MatrixXd wp = MatrixXd::Identity(q2, q2) - plant.D22 * k.DK;
    SolveWellPosed(wp, MatrixXd::Zero(q2, 0), "I - D22 D_K");
  }

  SystemMatrix cl;
  if (plant.D22.size() == 0 || plant.D22.isZero(0.0)) {
    cl.A.resize(n + nk, n + nk);
    cl.A << plant.A + plant.B2 * k.DK * plant.C2, plant.B2 * k.CK,
        k.BK * plant.C2, k.AK;
    cl.B.resize(n + nk, p1);
    cl.B << plant.B1 + plant.B2 * k.DK * plant.D21, k.BK * plant.D21;
    cl.C.resize(q1, n + nk);
    cl.C << plant.C1 + plant.D12 * k.DK * plant.C2, plant.D12 * k.CK;
    cl.D = plant.D11 + plant.D12 * k.DK * plant.D21;
  } else {
    // Lower LFT of the plant padded with the controller state, loaded by the
    // controller system matrix.
    SystemMatrix big;
    big.A = MatrixXd::Zero(n + nk + q1, n + nk + p1);
    big.A.block(0, 0, n, n) = plant.A;
    big.A.block(0, n + nk, n, p1) = plant.B1;
    big.A.block(n + nk, 0, q1, n) = plant.C1;
    big.A.block(n + nk, n + nk, q1, p1) = plant.D11;
    big.B = MatrixXd::Zero(n + nk + q1, nk + p2);
    big.B.block(0, nk, n, p2) = plant.B2;
    big.B.block(n, 0, nk, nk) = MatrixXd::Identity(nk, nk);
    big.B.block(n + nk, nk, q1, p2) = plant.D12;
    big.C = MatrixXd::Zero(nk + q2, n + nk + p1);
    big.C.block(0, n, nk, nk) = MatrixXd::Identity(nk, nk);
    big.C.block(nk, 0, q2, n) = plant.C2;
    big.C.block(nk, n + nk, q2, p1) = plant.D21;
    big.D = MatrixXd::Zero(nk + q2, nk + p2);
    big.D.block(nk, nk, q2, p2) = plant.D22;
    const MatrixXd m = LowerLft(big, k.AsSystem().Stacked());
    cl.A = m.topLeftCorner(n + nk, n + nk);
    cl.B = m.topRightCorner(n + nk, p1);
    cl.C = m.bottomLeftCorner(q1, n + nk);
    cl.D = m.bottomRightCorner(q1, p1);
  }
  return ClosedLoop{std::move(cl),
                    ShufflePermutation(plant.structure, k.ctrl_dims)};
}

LftModel Augment(const LftModel& model) {
  model.Validate();
  const auto& s = model.system;
  if (s.inputs() != s.outputs()) {
    throw DimensionError("augment needs a square channel, got " +
                         std::to_string(s.outputs()) + " outputs and " +
                         std::to_string(s.inputs()) + " inputs");
  }
  const int dim = s.states() + s.inputs();
  LftModel out{
      {s.Stacked(), MatrixXd::Zero(dim, 0), MatrixXd::Zero(0, dim),
       MatrixXd::Zero(0, 0)},
      DirectSum(model.structure, BlockStructure({FullBlock(s.inputs())}))};
  return out;
}

PartitionedSystem Adjust(const PartitionedSystem& plant) {
  plant.Validate();
  if (plant.p1() != plant.q1()) {
    throw DimensionError("adjust needs p1 == q1");
  }
  if (!plant.D22.isZero(0.0)) {
    throw UnsupportedError("adjust requires D22 = 0");
  }
  const int n = plant.n(), p1 = plant.p1(), p2 = plant.p2(), q2 = plant.q2();
  const int na = n + p1;
  PartitionedSystem adj;
  adj.A = Stack(plant.A, plant.B1, plant.C1, plant.D11);
  adj.B1 = MatrixXd::Zero(na, 0);
  adj.B2.resize(na, p2);
  adj.B2 << plant.B2, plant.D12;
  adj.C1 = MatrixXd::Zero(0, na);
  adj.C2.resize(q2, na);
  adj.C2 << plant.C2, plant.D21;
  adj.D11 = MatrixXd::Zero(0, 0);
  adj.D12 = MatrixXd::Zero(0, p2);
  adj.D21 = MatrixXd::Zero(q2, 0);
  adj.D22 = MatrixXd::Zero(q2, p2);
  adj.structure = DirectSum(plant.structure, BlockStructure({FullBlock(p1)}));
  return adj;
}

std::vector<int> AdjustedClosedLoopOrder(int n, int p1, int nk) {
  std::vector<int> order;
  order.reserve(n + p1 + nk);
  for (int i = 0; i < n; ++i) order.push_back(i);
  for (int i = 0; i < nk; ++i) order.push_back(n + p1 + i);
  for (int i = 0; i < p1; ++i) order.push_back(n + i);
  return order;
}

}  // namespace lft
