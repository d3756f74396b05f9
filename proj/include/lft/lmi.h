#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lft/lft.h"
#include "lft/structures.h"

namespace lft {

/// Per-block bound on the controller partial-state dimension n_{Kk};
/// std::nullopt leaves the block unconstrained.
using DimBound = std::optional<int>;
using ControllerDimSpec = std::vector<DimBound>;

ControllerDimSpec StaticDims(const BlockStructure& s);
ControllerDimSpec UnconstrainedDims(const BlockStructure& s);
ControllerDimSpec PrescribedDims(const std::vector<int>& dims);

enum class VariableKind { kStructured, kScalar, kFree };

/// A named group of decision coordinates. Structured groups range over the
/// symmetric commutant of `structure` (coordinates follow
/// SymmetricCommutantBasis), scalar groups are one coordinate, free groups are
/// an unstructured rows-by-cols matrix stored column-major.
struct VariableGroup {
  std::string name;
  VariableKind kind = VariableKind::kScalar;
  BlockStructure structure;
  int rows = 1;
  int cols = 1;
  int offset = 0;
  int size = 0;
};

/// F(v) = F0 + sum_i v_i F_i with symmetric coefficients. Only coordinates
/// with a nonzero coefficient are stored.
struct AffineMatrixExpr {
  Eigen::MatrixXd constant;
  std::vector<std::pair<int, Eigen::MatrixXd>> terms;

  AffineMatrixExpr() = default;
  explicit AffineMatrixExpr(Eigen::MatrixXd c) : constant(std::move(c)) {}

  int dim() const { return static_cast<int>(constant.rows()); }
  Eigen::MatrixXd Evaluate(const Eigen::VectorXd& v) const;
  /// T^T F(v) T.
  AffineMatrixExpr Congruence(const Eigen::MatrixXd& t) const;
  /// Adds `coeff` (symmetrized) to the coefficient of coordinate `index`.
  void AddTerm(int index, const Eigen::MatrixXd& coeff);
  AffineMatrixExpr& operator+=(const AffineMatrixExpr& other);
};

/// A constraint F(v) < 0 (strict, enters the margin) or F(v) <= 0.
struct LmiConstraint {
  std::string label;
  AffineMatrixExpr expr;
  bool strict = true;
};

/// A system of affine matrix inequalities over named variable groups.
class LmiProblem {
 public:
  explicit LmiProblem(std::string source = {}) : source_(std::move(source)) {}

  /// Adds a symmetric commutant-valued variable; returns its group index.
  int AddStructuredVariable(const std::string& name,
                            const BlockStructure& structure);
  int AddScalarVariable(const std::string& name);
  int AddFreeVariable(const std::string& name, int rows, int cols);

  void AddConstraint(std::string label, AffineMatrixExpr expr,
                     bool strict = true);
  /// Strict positivity of every core of a structured group (or of a scalar).
  void AddPositivity(const std::string& group);

  /// Linear image of a structured or free group: sum_i v_i map(E_i), where
  /// E_i is the assembled basis matrix of coordinate i.
  AffineMatrixExpr Linear(
      const std::string& group,
      const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& map) const;
  /// Term v_mu * coeff for a scalar group.
  AffineMatrixExpr ScalarTerm(const std::string& group,
                              const Eigen::MatrixXd& coeff) const;

  /// Pins a coordinate to a value; the solver leaves it untouched.
  void FixCoordinate(int index, double value);
  const std::map<int, double>& fixed() const { return fixed_; }
  /// Groups constrained positive by AddPositivity.
  bool is_positive(const std::string& group) const {
    return positive_.count(group) > 0;
  }

  int num_variables() const { return num_variables_; }
  const std::vector<VariableGroup>& groups() const { return groups_; }
  const VariableGroup& group(const std::string& name) const;
  bool has_group(const std::string& name) const;
  const std::vector<LmiConstraint>& constraints() const { return constraints_; }
  const std::string& source() const { return source_; }
  /// Human-readable coordinate name such as "X:k=1:(1,2)" or "mu".
  std::string CoordinateLabel(int index) const;

  CommutantElement StructuredValue(const std::string& group,
                                   const Eigen::VectorXd& v) const;
  double ScalarValue(const std::string& group, const Eigen::VectorXd& v) const;
  Eigen::MatrixXd FreeValue(const std::string& group,
                            const Eigen::VectorXd& v) const;
  /// Writes a commutant element into the coordinates of `group`.
  void Encode(const std::string& group, const CommutantElement& value,
              Eigen::VectorXd& v) const;
  void EncodeScalar(const std::string& group, double value,
                    Eigen::VectorXd& v) const;
  void EncodeFree(const std::string& group, const Eigen::MatrixXd& value,
                  Eigen::VectorXd& v) const;

 private:
  int AddGroup(VariableGroup g);

  std::string source_;
  std::vector<VariableGroup> groups_;
  std::vector<LmiConstraint> constraints_;
  std::map<int, double> fixed_;
  std::set<std::string> positive_;
  int num_variables_ = 0;
};

/// Orthonormal basis of Ker m, one column per null direction.
Eigen::MatrixXd KernelBasis(const Eigen::MatrixXd& m);

enum class SchurPivot { kLowerRight, kUpperLeft };

/// For S = [P Q; Q^T R] with the pivot block of size `pivot_size`:
/// P - Q R^{-1} Q^T (lower-right pivot) or R - Q^T P^{-1} Q (upper-left).
/// Throws std::domain_error when the pivot block is singular.
Eigen::MatrixXd SchurComplement(const Eigen::MatrixXd& s, int pivot_size,
                                SchurPivot which = SchurPivot::kLowerRight);

/// Largest eigenvalue of the symmetric part; -inf for an empty matrix.
double MaxEigenvalue(const Eigen::MatrixXd& s);
/// S < 0 decided as R < 0 and (P - Q R^{-1} Q^T) < 0 with R the trailing
/// block of size `pivot_size`.
bool IsNegativeDefiniteBySchur(const Eigen::MatrixXd& s, int pivot_size);

/// Q-performance synthesis conditions for `plant` in X, Y: both compressed
/// LMIs with kernels of [B2^T D12^T] and [C2 D21]. Coupling is not included.
LmiProblem BuildPerformanceLmis(const PartitionedSystem& plant);

/// Q-stabilization conditions projected on Ker B2^T and Ker C2.
LmiProblem BuildStabilizationLmis(const PartitionedSystem& plant);

/// A Y A^T - Y - B2 B2^T < 0 and A^T X A - X - C2^T C2 < 0.
LmiProblem BuildUnconstrainedLmis(const PartitionedSystem& plant);

/// Scaling of the full block in the adjusted conditions: either fixed values
/// (mu for the Y side, mu_tilde for the X side) or free scalar variables.
struct AdjustedScaling {
  bool free = false;
  double mu = 1.0;
  double mu_tilde = 1.0;
};

/// Projected stabilization conditions for the adjusted plant, written over
/// diag(Y, mu I) and diag(X, mu_tilde I).
LmiProblem BuildAdjustedLmis(const PartitionedSystem& plant,
                             AdjustedScaling scaling = {});

/// Adds [X_k0 I; I Y_k0] > 0 for each block with n_k > 0 (as -[..] < 0).
void AddCouplingConstraints(LmiProblem& problem, const std::string& x,
                            const std::string& y, bool strict = true);

/// Affine expression of [X_k0 I; I Y_k0] for block k.
AffineMatrixExpr CouplingExpr(const LmiProblem& problem, const std::string& x,
                              const std::string& y, int k);

inline constexpr double kRankTol = 1e-8;

struct CouplingBlockReport {
  int block = 0;
  double min_eigenvalue = 0;
  int rank = 0;
  std::optional<int> rank_bound;  // n_k + n_Kk; nullopt when unconstrained
  bool psd = false;
  bool passes = false;
  int minimal_ctrl_dim = 0;  // rank(X_k0 - Y_k0^{-1})
};

/// Per-block coupling and rank report for [X_k0 I; I Y_k0]. Eigenvalues
/// below tol * lambda_max count as zero. Throws std::invalid_argument when X
/// or Y is not positive definite.
std::vector<CouplingBlockReport> CouplingRank(const CommutantElement& x,
                                              const CommutantElement& y,
                                              const ControllerDimSpec& dims,
                                              double tol = kRankTol);

}  // namespace lft
