#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lft/structures.h"

namespace lft {

/// A 2x2 block operator [A B; C D] mapping [x; u] to [x~; y].
struct SystemMatrix {
  Eigen::MatrixXd A, B, C, D;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }

  /// Throws DimensionError unless the four blocks fit together.
  void Validate() const;
  /// The blocks stacked into one dense matrix.
  Eigen::MatrixXd Stacked() const;
};

/// A system matrix together with the structure acting on its state.
struct LftModel {
  SystemMatrix system;
  BlockStructure structure;

  void Validate() const;
};

/// Plant with split channels: u = [u1 (disturbance); u2 (control)],
/// y = [y1 (error); y2 (measurement)].
struct PartitionedSystem {
  Eigen::MatrixXd A, B1, B2, C1, C2, D11, D12, D21, D22;
  BlockStructure structure;

  int n() const { return static_cast<int>(A.rows()); }
  int p1() const { return static_cast<int>(B1.cols()); }
  int p2() const { return static_cast<int>(B2.cols()); }
  int q1() const { return static_cast<int>(C1.rows()); }
  int q2() const { return static_cast<int>(C2.rows()); }

  /// Dimension consistency, including n == structure.total_dim().
  void Validate() const;
  /// [A B1; C1 D11] over the plant structure.
  LftModel PerformanceModel() const;
  /// The whole plant as an LFT model with inputs [u1; u2], outputs [y1; y2].
  LftModel FullModel() const;
};

/// Output-feedback controller [A_K B_K; C_K D_K] whose state is structured by
/// the plant cores repeated n_{Kk} times.
struct Controller {
  Eigen::MatrixXd AK, BK, CK, DK;
  std::vector<int> ctrl_dims;
  BlockStructure structure;

  int states() const { return static_cast<int>(AK.rows()); }

  /// Dimension consistency against the plant's control channels.
  void Validate(const PartitionedSystem& plant) const;
  SystemMatrix AsSystem() const { return {AK, BK, CK, DK}; }

  static Controller Static(const PartitionedSystem& plant, Eigen::MatrixXd dk);
  static Controller Zero(const PartitionedSystem& plant,
                         const std::vector<int>& ctrl_dims);
};

/// Closed-loop realization in the coordinates [x; x_K], with the shuffle onto
/// the merged structure attached.
struct ClosedLoop {
  SystemMatrix system;
  ShufflePermutation permutation;

  const BlockStructure& merged_structure() const {
    return permutation.merged();
  }
  /// The realization with its state expressed in merged coordinates.
  LftModel MergedModel() const;
};

inline constexpr double kIllPosedCondition = 1e12;

/// D + C (I - Delta A)^{-1} Delta B.
/// Throws IllPosedError if cond(I - Delta A) exceeds kIllPosedCondition.
Eigen::MatrixXd UpperLft(const SystemMatrix& m, const Eigen::MatrixXd& delta);

/// A + B (I - Delta' D)^{-1} Delta' C.
Eigen::MatrixXd LowerLft(const SystemMatrix& m, const Eigen::MatrixXd& delta);

/// Feedback connection of plant and controller. Uses the explicit closed-loop
/// formula when D22 = 0 and the lower LFT of the augmented plant otherwise.
/// Throws IllPosedError when I - D22 D_K is singular.
ClosedLoop CloseLoop(const PartitionedSystem& plant, const Controller& k);

/// Augmented model diag([A B; C D], 0) over structure (+) full(p): the old
/// input/output channel becomes state, the new channels are empty.
LftModel Augment(const LftModel& model);

/// Adjusted plant: state [x; u1] over structure (+) full(p1), control
/// channel [B2; D12], measurement [C2 D21], and empty performance channels.
/// Requires p1 == q1 and D22 == 0.
PartitionedSystem Adjust(const PartitionedSystem& plant);

/// Permutation taking the closed-loop state of Adjust(plant) with a
/// controller of order nK, [x; u1; x_K], to [x; x_K; u1]: index_map[i] is the
/// source coordinate of position i.
std::vector<int> AdjustedClosedLoopOrder(int n, int p1, int nk);

}  // namespace lft
