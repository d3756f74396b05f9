#include "lft/lmi.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd Sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd BlockDiag(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

// Coordinate offset of block k's core inside a structured group.
int CoreOffset(const BlockStructure& s, int k) {
  int off = 0;
  for (int l = 0; l < k; ++l) {
    const int n = s.block(l).n;
    off += n * (n + 1) / 2;
  }
  return off;
}

void RequireSquareChannel(const PartitionedSystem& plant) {
  if (plant.p1() != plant.q1()) {
    throw DimensionError("performance conditions need p1 == q1, got p1 = " +
                         std::to_string(plant.p1()) +
                         ", q1 = " + std::to_string(plant.q1()));
  }
}

}  // namespace

ControllerDimSpec StaticDims(const BlockStructure& s) {
  return ControllerDimSpec(s.num_blocks(), 0);
}

ControllerDimSpec UnconstrainedDims(const BlockStructure& s) {
  return ControllerDimSpec(s.num_blocks(), std::nullopt);
}

ControllerDimSpec PrescribedDims(const std::vector<int>& dims) {
  ControllerDimSpec out;
  for (int d : dims) {
    if (d < 0) throw DimensionError("controller dimensions must be >= 0");
    out.push_back(d);
  }
  return out;
}

MatrixXd AffineMatrixExpr::Evaluate(const VectorXd& v) const {
  MatrixXd out = constant;
  for (const auto& [i, c] : terms) {
    if (i >= v.size()) {
      throw std::out_of_range("assignment misses coordinate " +
                              std::to_string(i));
    }
    out += v(i) * c;
  }
  return out;
}

AffineMatrixExpr AffineMatrixExpr::Congruence(const MatrixXd& t) const {
  AffineMatrixExpr out(Sym(t.transpose() * constant * t));
  for (const auto& [i, c] : terms) out.AddTerm(i, t.transpose() * c * t);
  return out;
}

void AffineMatrixExpr::AddTerm(int index, const MatrixXd& coeff) {
  if (coeff.rows() != constant.rows() || coeff.cols() != constant.cols()) {
    throw DimensionError("coefficient does not match the expression size");
  }
  if (coeff.size() == 0 || coeff.isZero(0.0)) return;
  for (auto& [i, c] : terms) {
    if (i == index) {
      c += Sym(coeff);
      return;
    }
  }
  terms.emplace_back(index, Sym(coeff));
}

AffineMatrixExpr& AffineMatrixExpr::operator+=(const AffineMatrixExpr& other) {
  if (other.constant.rows() != constant.rows()) {
    throw DimensionError("cannot add expressions of different sizes");
  }
  constant += other.constant;
  for (const auto& [i, c] : other.terms) AddTerm(i, c);
  return *this;
}

int LmiProblem::AddGroup(VariableGroup g) {
  if (has_group(g.name)) {
    throw std::invalid_argument("duplicate variable group " + g.name);
  }
  g.offset = num_variables_;
  num_variables_ += g.size;
  groups_.push_back(std::move(g));
  return static_cast<int>(groups_.size()) - 1;
}

int LmiProblem::AddStructuredVariable(const std::string& name,
                                      const BlockStructure& structure) {
  VariableGroup g;
  g.name = name;
  g.kind = VariableKind::kStructured;
  g.structure = structure;
  g.rows = g.cols = structure.total_dim();
  g.size = structure.symmetric_commutant_dim();
  return AddGroup(std::move(g));
}

int LmiProblem::AddScalarVariable(const std::string& name) {
  VariableGroup g;
  g.name = name;
  g.kind = VariableKind::kScalar;
  g.size = 1;
  return AddGroup(std::move(g));
}

int LmiProblem::AddFreeVariable(const std::string& name, int rows, int cols) {
  VariableGroup g;
  g.name = name;
  g.kind = VariableKind::kFree;
  g.rows = rows;
  g.cols = cols;
  g.size = rows * cols;
  return AddGroup(std::move(g));
}

void LmiProblem::AddConstraint(std::string label, AffineMatrixExpr expr,
                               bool strict) {
  if (expr.constant.rows() != expr.constant.cols()) {
    throw DimensionError("constraint " + label + " is not square");
  }
  for (const auto& [i, c] : expr.terms) {
    if (i < 0 || i >= num_variables_) {
      throw std::out_of_range("constraint " + label +
                              " references an unknown coordinate");
    }
  }
  if (expr.dim() == 0) return;
  expr.constant = Sym(expr.constant);
  constraints_.push_back({std::move(label), std::move(expr), strict});
}

void LmiProblem::AddPositivity(const std::string& name) {
  const VariableGroup& g = group(name);
  positive_.insert(name);
  if (g.kind == VariableKind::kScalar) {
    AffineMatrixExpr e(MatrixXd::Zero(1, 1));
    e.AddTerm(g.offset, -MatrixXd::Ones(1, 1));
    AddConstraint(name + ">0", std::move(e));
    return;
  }
  if (g.kind != VariableKind::kStructured) {
    throw std::invalid_argument(
        "positivity needs a structured or scalar group");
  }
  for (int k = 0; k < g.structure.num_blocks(); ++k) {
    const int n = g.structure.block(k).n;
    if (n == 0) continue;
    AffineMatrixExpr e(MatrixXd::Zero(n, n));
    int idx = g.offset + CoreOffset(g.structure, k);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j, ++idx) {
        MatrixXd c = MatrixXd::Zero(n, n);
        c(i, j) -= 1.0;
        if (i != j) c(j, i) -= 1.0;
        e.AddTerm(idx, c);
      }
    }
    AddConstraint(name + ":k=" + std::to_string(k + 1) + ">0", std::move(e));
  }
}

AffineMatrixExpr LmiProblem::Linear(
    const std::string& name,
    const std::function<MatrixXd(const MatrixXd&)>& map) const {
  const VariableGroup& g = group(name);
  if (g.kind == VariableKind::kScalar) {
    throw std::invalid_argument("use ScalarTerm for scalar group " + name);
  }
  const MatrixXd zero = map(MatrixXd::Zero(g.rows, g.cols));
  AffineMatrixExpr out(MatrixXd::Zero(zero.rows(), zero.cols()));
  if (g.kind == VariableKind::kStructured) {
    const auto basis = SymmetricCommutantBasis(g.structure);
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
      out.AddTerm(g.offset + i, map(basis[i].Assemble()));
    }
  } else {
    for (int c = 0; c < g.cols; ++c) {
      for (int r = 0; r < g.rows; ++r) {
        MatrixXd e = MatrixXd::Zero(g.rows, g.cols);
        e(r, c) = 1.0;
        out.AddTerm(g.offset + c * g.rows + r, map(e));
      }
    }
  }
  return out;
}

AffineMatrixExpr LmiProblem::ScalarTerm(const std::string& name,
                                        const MatrixXd& coeff) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kScalar) {
    throw std::invalid_argument(name + " is not a scalar group");
  }
  AffineMatrixExpr out(MatrixXd::Zero(coeff.rows(), coeff.cols()));
  out.AddTerm(g.offset, coeff);
  return out;
}

void LmiProblem::FixCoordinate(int index, double value) {
  if (index < 0 || index >= num_variables_) {
    throw std::out_of_range("cannot fix unknown coordinate");
  }
  fixed_[index] = value;
}

const VariableGroup& LmiProblem::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw std::out_of_range("no variable group named " + name);
}

bool LmiProblem::has_group(const std::string& name) const {
  return std::any_of(groups_.begin(), groups_.end(),
                     [&](const VariableGroup& g) { return g.name == name; });
}

std::string LmiProblem::CoordinateLabel(int index) const {
  for (const auto& g : groups_) {
    if (index < g.offset || index >= g.offset + g.size) continue;
    const int local = index - g.offset;
    switch (g.kind) {
      case VariableKind::kScalar:
        return g.name;
      case VariableKind::kFree:
        return g.name + ":(" + std::to_string(local % g.rows + 1) + "," +
               std::to_string(local / g.rows + 1) + ")";
      case VariableKind::kStructured: {
        int rest = local;
        for (int k = 0; k < g.structure.num_blocks(); ++k) {
          const int n = g.structure.block(k).n;
          const int size = n * (n + 1) / 2;
          if (rest >= size) {
            rest -= size;
            continue;
          }
          for (int i = 0; i < n; ++i) {
            if (rest < n - i) {
              return g.name + ":k=" + std::to_string(k + 1) + ":(" +
                     std::to_string(i + 1) + "," +
                     std::to_string(i + rest + 1) + ")";
            }
            rest -= n - i;
          }
        }
        break;
      }
    }
  }
  throw std::out_of_range("coordinate " + std::to_string(index) +
                          " out of range");
}

CommutantElement LmiProblem::StructuredValue(const std::string& name,
                                             const VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kStructured) {
    throw std::invalid_argument(name + " is not a structured group");
  }
  if (v.size() < g.offset + g.size) {
    throw std::out_of_range("assignment misses variable " + name);
  }
  std::vector<MatrixXd> cores;
  int idx = g.offset;
  for (const auto& b : g.structure.blocks()) {
    MatrixXd c(b.n, b.n);
    for (int i = 0; i < b.n; ++i) {
      for (int j = i; j < b.n; ++j, ++idx) c(i, j) = c(j, i) = v(idx);
    }
    cores.push_back(std::move(c));
  }
  return CommutantElement(g.structure, std::move(cores));
}

double LmiProblem::ScalarValue(const std::string& name,
                               const VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kScalar) {
    throw std::invalid_argument(name + " is not a scalar group");
  }
  if (v.size() <= g.offset) {
    throw std::out_of_range("assignment misses variable " + name);
  }
  return v(g.offset);
}

MatrixXd LmiProblem::FreeValue(const std::string& name,
                               const VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kFree) {
    throw std::invalid_argument(name + " is not a free group");
  }
  if (v.size() < g.offset + g.size) {
    throw std::out_of_range("assignment misses variable " + name);
  }
  return Eigen::Map<const MatrixXd>(v.data() + g.offset, g.rows, g.cols);
}

void LmiProblem::Encode(const std::string& name, const CommutantElement& value,
                        VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kStructured ||
      !(value.structure() == g.structure)) {
    throw DimensionError("value does not match structured group " + name);
  }
  if (v.size() < num_variables_) v.conservativeResize(num_variables_);
  int idx = g.offset;
  for (int k = 0; k < g.structure.num_blocks(); ++k) {
    const MatrixXd c = Sym(value.core(k));
    for (int i = 0; i < c.rows(); ++i) {
      for (int j = i; j < c.cols(); ++j, ++idx) v(idx) = c(i, j);
    }
  }
}

void LmiProblem::EncodeScalar(const std::string& name, double value,
                              VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kScalar) {
    throw std::invalid_argument(name + " is not a scalar group");
  }
  if (v.size() < num_variables_) v.conservativeResize(num_variables_);
  v(g.offset) = value;
}

void LmiProblem::EncodeFree(const std::string& name, const MatrixXd& value,
                            VectorXd& v) const {
  const VariableGroup& g = group(name);
  if (g.kind != VariableKind::kFree || value.rows() != g.rows ||
      value.cols() != g.cols) {
    throw DimensionError("value does not match free group " + name);
  }
  if (v.size() < num_variables_) v.conservativeResize(num_variables_);
  Eigen::Map<MatrixXd>(v.data() + g.offset, g.rows, g.cols) = value;
}

MatrixXd KernelBasis(const MatrixXd& m) {
  const auto cols = m.cols();
  if (cols == 0) return MatrixXd::Zero(0, 0);
  if (m.rows() == 0) return MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double tol =
      std::max(m.rows(), cols) * std::numeric_limits<double>::epsilon() * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

MatrixXd SchurComplement(const MatrixXd& s, int pivot_size, SchurPivot which) {
  const int n = static_cast<int>(s.rows());
  if (s.cols() != n || pivot_size < 0 || pivot_size > n) {
    throw DimensionError(
        "Schur complement needs a square matrix and a pivot "
        "block that fits");
  }
  const int rest = n - pivot_size;
  MatrixXd pivot, q, keep;
  if (which == SchurPivot::kLowerRight) {
    pivot = s.bottomRightCorner(pivot_size, pivot_size);
    q = s.topRightCorner(rest, pivot_size);
    keep = s.topLeftCorner(rest, rest);
  } else {
    pivot = s.topLeftCorner(pivot_size, pivot_size);
    q = s.topRightCorner(pivot_size, rest).transpose();
    keep = s.bottomRightCorner(rest, rest);
  }
  if (pivot_size == 0) return keep;
  Eigen::JacobiSVD<MatrixXd> svd(pivot);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0) ||
      sv(0) / sv(sv.size() - 1) > kIllPosedCondition) {
    throw std::domain_error("Schur complement pivot block is singular");
  }
  return Sym(keep - q * pivot.fullPivLu().solve(q.transpose()));
}

double MaxEigenvalue(const MatrixXd& s) {
  if (s.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sym(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool IsNegativeDefiniteBySchur(const MatrixXd& s, int pivot_size) {
  const MatrixXd r = s.bottomRightCorner(pivot_size, pivot_size);
  if (pivot_size > 0 && !(MaxEigenvalue(r) < 0)) return false;
  return MaxEigenvalue(SchurComplement(s, pivot_size)) < 0;
}

LmiProblem BuildPerformanceLmis(const PartitionedSystem& plant) {
  plant.Validate();
  RequireSquareChannel(plant);
  const int n = plant.n(), p1 = plant.p1(), q1 = plant.q1();
  LmiProblem lp("performance");
  lp.AddStructuredVariable("X", plant.structure);
  lp.AddStructuredVariable("Y", plant.structure);
  lp.AddPositivity("X");
  lp.AddPositivity("Y");

  // Y side: rows [x; y1; u1], compressed on Ker [B2^T D12^T] (x) I.
  {
    MatrixXd bt(plant.p2(), n + q1);
    bt << plant.B2.transpose(), plant.D12.transpose();
    const MatrixXd nc = KernelBasis(bt);
    MatrixXd ac(n + q1, n);
    ac << plant.A, plant.C1;
    const int dim = n + q1 + p1;
    MatrixXd c0 = MatrixXd::Zero(dim, dim);
    c0.block(n, n, q1, q1) = -MatrixXd::Identity(q1, q1);
    c0.block(0, n + q1, n, p1) = plant.B1;
    c0.block(n, n + q1, q1, p1) = plant.D11;
    c0.block(n + q1, 0, p1, n) = plant.B1.transpose();
    c0.block(n + q1, n, p1, q1) = plant.D11.transpose();
    c0.block(n + q1, n + q1, p1, p1) = -MatrixXd::Identity(p1, p1);
    AffineMatrixExpr e = lp.Linear("Y", [&](const MatrixXd& y) {
      MatrixXd out = MatrixXd::Zero(dim, dim);
      out.topLeftCorner(n + q1, n + q1) = ac * y * ac.transpose();
      out.topLeftCorner(n, n) -= y;
      return out;
    });
    e += AffineMatrixExpr(c0);
    lp.AddConstraint("Y-LMI",
                     e.Congruence(BlockDiag(nc, MatrixXd::Identity(p1, p1))));
  }
  // X side: rows [x; u1; y1], compressed on Ker [C2 D21] (x) I.
  {
    MatrixXd cd(plant.q2(), n + p1);
    cd << plant.C2, plant.D21;
    const MatrixXd no = KernelBasis(cd);
    MatrixXd ab(n, n + p1);
    ab << plant.A, plant.B1;
    const int dim = n + p1 + q1;
    MatrixXd c0 = MatrixXd::Zero(dim, dim);
    c0.block(n, n, p1, p1) = -MatrixXd::Identity(p1, p1);
    c0.block(0, n + p1, n, q1) = plant.C1.transpose();
    c0.block(n, n + p1, p1, q1) = plant.D11.transpose();
    c0.block(n + p1, 0, q1, n) = plant.C1;
    c0.block(n + p1, n, q1, p1) = plant.D11;
    c0.block(n + p1, n + p1, q1, q1) = -MatrixXd::Identity(q1, q1);
    AffineMatrixExpr e = lp.Linear("X", [&](const MatrixXd& x) {
      MatrixXd out = MatrixXd::Zero(dim, dim);
      out.topLeftCorner(n + p1, n + p1) = ab.transpose() * x * ab;
      out.topLeftCorner(n, n) -= x;
      return out;
    });
    e += AffineMatrixExpr(c0);
    lp.AddConstraint("X-LMI",
                     e.Congruence(BlockDiag(no, MatrixXd::Identity(q1, q1))));
  }
  return lp;
}

LmiProblem BuildStabilizationLmis(const PartitionedSystem& plant) {
  plant.Validate();
  LmiProblem lp("stabilization");
  lp.AddStructuredVariable("X", plant.structure);
  lp.AddStructuredVariable("Y", plant.structure);
  lp.AddPositivity("X");
  lp.AddPositivity("Y");
  const MatrixXd& a = plant.A;
  const MatrixXd bp = KernelBasis(plant.B2.transpose());
  const MatrixXd cpt = KernelBasis(plant.C2);
  lp.AddConstraint("Y-LMI", lp.Linear("Y", [&](const MatrixXd& y) {
                                return MatrixXd(a * y * a.transpose() - y);
                              }).Congruence(bp));
  lp.AddConstraint("X-LMI", lp.Linear("X", [&](const MatrixXd& x) {
                                return MatrixXd(a.transpose() * x * a - x);
                              }).Congruence(cpt));
  return lp;
}

LmiProblem BuildUnconstrainedLmis(const PartitionedSystem& plant) {
  plant.Validate();
  LmiProblem lp("unconstrained");
  lp.AddStructuredVariable("X", plant.structure);
  lp.AddStructuredVariable("Y", plant.structure);
  lp.AddPositivity("X");
  lp.AddPositivity("Y");
  const MatrixXd& a = plant.A;
  AffineMatrixExpr ey = lp.Linear("Y", [&](const MatrixXd& y) {
    return MatrixXd(a * y * a.transpose() - y);
  });
  ey += AffineMatrixExpr(-plant.B2 * plant.B2.transpose());
  lp.AddConstraint("Y-LMI", std::move(ey));
  AffineMatrixExpr ex = lp.Linear("X", [&](const MatrixXd& x) {
    return MatrixXd(a.transpose() * x * a - x);
  });
  ex += AffineMatrixExpr(-plant.C2.transpose() * plant.C2);
  lp.AddConstraint("X-LMI", std::move(ex));
  return lp;
}

LmiProblem BuildAdjustedLmis(const PartitionedSystem& plant,
                             AdjustedScaling scaling) {
  plant.Validate();
  RequireSquareChannel(plant);
  const int n = plant.n(), p1 = plant.p1(), q1 = plant.q1();
  LmiProblem lp(scaling.free ? "adjusted-free" : "adjusted-fixed");
  lp.AddStructuredVariable("X", plant.structure);
  lp.AddStructuredVariable("Y", plant.structure);
  lp.AddPositivity("X");
  lp.AddPositivity("Y");
  if (scaling.free) {
    lp.AddScalarVariable("mu");
    lp.AddScalarVariable("mu_tilde");
    lp.AddPositivity("mu");
    lp.AddPositivity("mu_tilde");
  }
  MatrixXd m(n + q1, n + p1);
  m << plant.A, plant.B1, plant.C1, plant.D11;

  // Y side over diag(Y, mu I_p1).
  {
    MatrixXd bt(plant.p2(), n + q1);
    bt << plant.B2.transpose(), plant.D12.transpose();
    const MatrixXd nc = KernelBasis(bt);
    auto body = [&](const MatrixXd& w) {
      return MatrixXd(m * w * m.transpose() - w);
    };
    AffineMatrixExpr e = lp.Linear("Y", [&](const MatrixXd& y) {
      return body(BlockDiag(y, MatrixXd::Zero(p1, p1)));
    });
    const MatrixXd unit =
        body(BlockDiag(MatrixXd::Zero(n, n), MatrixXd::Identity(p1, p1)));
    if (scaling.free) {
      e += lp.ScalarTerm("mu", unit);
    } else {
      e += AffineMatrixExpr(scaling.mu * unit);
    }
    lp.AddConstraint("Y-LMI", e.Congruence(nc));
  }
  // X side over diag(X, mu_tilde I_q1).
  {
    MatrixXd cd(plant.q2(), n + p1);
    cd << plant.C2, plant.D21;
    const MatrixXd no = KernelBasis(cd);
    auto body = [&](const MatrixXd& w) {
      return MatrixXd(m.transpose() * w * m - w);
    };
    AffineMatrixExpr e = lp.Linear("X", [&](const MatrixXd& x) {
      return body(BlockDiag(x, MatrixXd::Zero(q1, q1)));
    });
    const MatrixXd unit =
        body(BlockDiag(MatrixXd::Zero(n, n), MatrixXd::Identity(q1, q1)));
    if (scaling.free) {
      e += lp.ScalarTerm("mu_tilde", unit);
    } else {
      e += AffineMatrixExpr(scaling.mu_tilde * unit);
    }
    lp.AddConstraint("X-LMI", e.Congruence(no));
  }
  return lp;
}

AffineMatrixExpr CouplingExpr(const LmiProblem& problem, const std::string& x,
                              const std::string& y, int k) {
  const VariableGroup& gx = problem.group(x);
  const VariableGroup& gy = problem.group(y);
  if (gx.kind != VariableKind::kStructured ||
      gy.kind != VariableKind::kStructured || !(gx.structure == gy.structure)) {
    throw DimensionError(
        "coupling needs two structured groups over one "
        "structure");
  }
  const int n = gx.structure.block(k).n;
  AffineMatrixExpr e(MatrixXd::Zero(2 * n, 2 * n));
  e.constant.topRightCorner(n, n) = MatrixXd::Identity(n, n);
  e.constant.bottomLeftCorner(n, n) = MatrixXd::Identity(n, n);
  const int off = CoreOffset(gx.structure, k);
  for (int side = 0; side < 2; ++side) {
    int idx = (side == 0 ? gx.offset : gy.offset) + off;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j, ++idx) {
        MatrixXd c = MatrixXd::Zero(2 * n, 2 * n);
        c(side * n + i, side * n + j) = 1.0;
        c(side * n + j, side * n + i) = 1.0;
        e.AddTerm(idx, c);
      }
    }
  }
  return e;
}

void AddCouplingConstraints(LmiProblem& problem, const std::string& x,
                            const std::string& y, bool strict) {
  const BlockStructure& s = problem.group(x).structure;
  for (int k = 0; k < s.num_blocks(); ++k) {
    if (s.block(k).n == 0) continue;
    AffineMatrixExpr e = CouplingExpr(problem, x, y, k);
    AffineMatrixExpr neg(-e.constant);
    for (const auto& [i, c] : e.terms) neg.AddTerm(i, -c);
    problem.AddConstraint("coupling:k=" + std::to_string(k + 1), std::move(neg),
                          strict);
  }
}

std::vector<CouplingBlockReport> CouplingRank(const CommutantElement& x,
                                              const CommutantElement& y,
                                              const ControllerDimSpec& dims,
                                              double tol) {
  const BlockStructure& s = x.structure();
  if (!(y.structure() == s)) {
    throw DimensionError("X and Y must share one structure");
  }
  if (static_cast<int>(dims.size()) != s.num_blocks()) {
    throw DimensionError("controller dimensions must have one entry per block");
  }
  if (!(x.MinEigenvalue() > 0) || !(y.MinEigenvalue() > 0)) {
    throw std::invalid_argument(
        "coupling report needs positive definite X "
        "and Y");
  }
  std::vector<CouplingBlockReport> out;
  for (int k = 0; k < s.num_blocks(); ++k) {
    CouplingBlockReport r;
    r.block = k;
    const int n = s.block(k).n;
    if (dims[k]) r.rank_bound = n + *dims[k];
    if (n == 0) {
      r.psd = r.passes = true;
      out.push_back(r);
      continue;
    }
    const MatrixXd& x0 = x.core(k);
    const MatrixXd& y0 = y.core(k);
    MatrixXd c(2 * n, 2 * n);
    c << x0, MatrixXd::Identity(n, n), MatrixXd::Identity(n, n), y0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sym(c), Eigen::EigenvaluesOnly);
    const VectorXd& ev = es.eigenvalues();
    const double cut = tol * ev(ev.size() - 1);
    r.min_eigenvalue = ev(0);
    r.rank = static_cast<int>((ev.array() > cut).count());
    r.psd = ev(0) >= -cut;
    r.passes = r.psd && (!r.rank_bound || r.rank <= *r.rank_bound);
    const MatrixXd gap = Sym(x0 - y0.inverse());
    Eigen::SelfAdjointEigenSolver<MatrixXd> gs(gap, Eigen::EigenvaluesOnly);
    r.minimal_ctrl_dim =
        static_cast<int>((gs.eigenvalues().array() > cut).count());
    out.push_back(r);
  }
  return out;
}

}  // namespace lft
