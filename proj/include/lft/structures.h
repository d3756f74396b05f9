#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace lft {

/// One block of an uncertainty structure: the load on this block is
/// Delta0 (x) I_n with Delta0 an arbitrary m-by-m real matrix.
///
/// A full (unstructured) p-by-p block is the case m = p, n = 1: the core is
/// arbitrary and the commutant reduces to lambda*I_p. The `full` flag only
/// records that the block was introduced as a full block.
struct Block {
  int m = 1;
  int n = 0;
  bool full = false;

  int dim() const { return m * n; }
  bool operator==(const Block&) const = default;
};

/// Block full of size p. Size 0 yields an empty (deleted) block.
Block FullBlock(int p);

/// The uncertainty structure: matrices diag(Delta0_k (x) I_{n_k}), k = 1..d.
/// Blocks with n_k = 0 are kept so that block indices stay aligned.
class BlockStructure {
 public:
  BlockStructure() = default;
  /// Throws StructureError on an empty list or m_k < 1 or n_k < 0.
  explicit BlockStructure(std::vector<Block> blocks);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int k) const { return blocks_.at(k); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int total_dim() const { return total_dim_; }
  /// Offset of block k inside the assembled matrix.
  int offset(int k) const { return offsets_.at(k); }

  /// Dimension of the commutant as a real vector space: sum n_k^2.
  int commutant_dim() const;
  /// Dimension of its symmetric part: sum n_k (n_k + 1) / 2.
  int symmetric_commutant_dim() const;

  /// Index of the designated frequency (shift) block, if any.
  std::optional<int> frequency_block() const { return frequency_block_; }
  BlockStructure WithFrequencyBlock(std::optional<int> k) const;

  bool operator==(const BlockStructure& other) const {
    return blocks_ == other.blocks_;
  }

 private:
  std::vector<Block> blocks_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
  std::optional<int> frequency_block_;
};

BlockStructure MakeBlockStructure(
    const std::vector<std::pair<int, int>>& blocks);

/// Structure of `a` followed by the blocks of `b`.
BlockStructure DirectSum(const BlockStructure& a, const BlockStructure& b);

/// An element of the commutant: block diagonal, block k holding m_k copies of
/// the n_k-by-n_k core Q_{k,0}.
class CommutantElement {
 public:
  CommutantElement() = default;
  CommutantElement(BlockStructure structure,
                   std::vector<Eigen::MatrixXd> cores);

  static CommutantElement Identity(const BlockStructure& structure);
  /// Reads the cores off the first diagonal copy of each block. No pattern
  /// check; use IsInCommutant for that.
  static CommutantElement FromAssembled(const Eigen::MatrixXd& m,
                                        const BlockStructure& structure);

  const BlockStructure& structure() const { return structure_; }
  const std::vector<Eigen::MatrixXd>& cores() const { return cores_; }
  const Eigen::MatrixXd& core(int k) const { return cores_.at(k); }

  Eigen::MatrixXd Assemble() const;

  CommutantElement Scaled(double alpha) const;
  CommutantElement Inverse() const;
  /// Symmetric square root; the cores must be symmetric positive semidefinite.
  CommutantElement SquareRoot() const;
  /// Smallest eigenvalue over all (symmetric) cores; +inf for an empty
  /// structure.
  double MinEigenvalue() const;

 private:
  BlockStructure structure_;
  std::vector<Eigen::MatrixXd> cores_;
};

/// Basis of the commutant: the elementary cores E_ij of every block.
std::vector<CommutantElement> CommutantBasis(const BlockStructure& structure);

/// Basis of the symmetric part of the commutant: per block, E_ii and
/// E_ij + E_ji for i < j, in row-major order of (i, j).
std::vector<CommutantElement> SymmetricCommutantBasis(
    const BlockStructure& structure);

inline constexpr double kPatternTol = 1e-9;

/// True iff `m` has the repeated block-diagonal commutant pattern of
/// `structure`, entrywise within `tol`. Throws DimensionError on size mismatch.
bool IsInCommutant(const Eigen::MatrixXd& m, const BlockStructure& structure,
                   double tol = kPatternTol);

/// True iff `m` is of the form diag(Delta0_k (x) I_{n_k}) within `tol`.
bool IsInStructure(const Eigen::MatrixXd& m, const BlockStructure& structure,
                   double tol = kPatternTol);

/// diag(Delta0_k (x) I_{n_k}) for the given m_k-by-m_k cores.
Eigen::MatrixXd AssembleUncertainty(const BlockStructure& structure,
                                    const std::vector<Eigen::MatrixXd>& cores);

struct UncertaintySample {
  std::vector<Eigen::MatrixXd> cores;
  Eigen::MatrixXd assembled;
};

/// Draws a structured Delta from the closed ball of the given radius.
///
/// Each core gets i.i.d. standard normal entries and is rescaled to spectral
/// norm radius*u, with u = 1 with probability 1/2 and u ~ Uniform(0, 1)
/// otherwise, so boundary points are hit often.
UncertaintySample SampleUncertainty(const BlockStructure& structure,
                                    double radius, std::uint64_t seed);
UncertaintySample SampleUncertainty(const BlockStructure& structure,
                                    double radius, std::mt19937_64& rng);

/// Controller structure sharing the plant's cores: blocks (m_k, n_{Kk}).
BlockStructure ControllerStructure(const BlockStructure& plant,
                                   std::span<const int> ctrl_dims);

/// Coordinate shuffle taking the closed-loop state [x; x_K] (plant blocks
/// followed by controller blocks) to the merged structure with repetition
/// counts n_k + n_{Kk}.
class ShufflePermutation {
 public:
  ShufflePermutation(const BlockStructure& plant,
                     std::span<const int> ctrl_dims);

  const BlockStructure& plant() const { return plant_; }
  const BlockStructure& controller() const { return controller_; }
  const BlockStructure& merged() const { return merged_; }
  const std::vector<int>& ctrl_dims() const { return ctrl_dims_; }
  /// index_map()[i] is the closed-loop coordinate placed at merged index i.
  const std::vector<int>& index_map() const { return index_map_; }

  /// The permutation matrix P, with P * [x; x_K] in merged coordinates.
  Eigen::MatrixXd Matrix() const;
  /// P * m * P^T.
  Eigen::MatrixXd ToMerged(const Eigen::MatrixXd& m) const;
  /// P^T * m * P.
  Eigen::MatrixXd FromMerged(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd PermuteRows(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd PermuteCols(const Eigen::MatrixXd& m) const;

 private:
  BlockStructure plant_;
  BlockStructure controller_;
  BlockStructure merged_;
  std::vector<int> ctrl_dims_;
  std::vector<int> index_map_;
};

}  // namespace lft
