#include "lft/structures.h"

#include <cmath>
#include <limits>
#include <string>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;

Block FullBlock(int p) {
  if (p < 0) throw StructureError("full block size must be nonnegative");
  if (p == 0) return Block{1, 0, true};
  return Block{p, 1, true};
}

BlockStructure::BlockStructure(std::vector<Block> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) {
    throw StructureError("block structure needs at least one block");
  }
  offsets_.reserve(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& b = blocks_[k];
    if (b.m < 1) {
      throw StructureError("block " + std::to_string(k + 1) +
                           ": multiplicity m must be >= 1");
    }
    if (b.n < 0) {
      throw StructureError("block " + std::to_string(k + 1) +
                           ": repetition n must be >= 0");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += b.dim();
  }
}

int BlockStructure::commutant_dim() const {
  int d = 0;
  for (const Block& b : blocks_) d += b.n * b.n;
  return d;
}

int BlockStructure::symmetric_commutant_dim() const {
  int d = 0;
  for (const Block& b : blocks_) d += b.n * (b.n + 1) / 2;
  return d;
}

BlockStructure BlockStructure::WithFrequencyBlock(std::optional<int> k) const {
  if (k && (*k < 0 || *k >= num_blocks())) {
    throw StructureError("frequency block index out of range");
  }
  BlockStructure out = *this;
  out.frequency_block_ = k;
  return out;
}

BlockStructure MakeBlockStructure(
    const std::vector<std::pair<int, int>>& blocks) {
  std::vector<Block> out;
  out.reserve(blocks.size());
  for (const auto& [m, n] : blocks) out.push_back(Block{m, n, false});
  return BlockStructure(std::move(out));
}

BlockStructure DirectSum(const BlockStructure& a, const BlockStructure& b) {
  std::vector<Block> blocks = a.blocks();
  blocks.insert(blocks.end(), b.blocks().begin(), b.blocks().end());
  return BlockStructure(std::move(blocks))
      .WithFrequencyBlock(a.frequency_block());
}

// ---------------------------------------------------------------------------
// CommutantElement

CommutantElement::CommutantElement(BlockStructure structure,
                                   std::vector<MatrixXd> cores)
    : structure_(std::move(structure)), cores_(std::move(cores)) {
  if (static_cast<int>(cores_.size()) != structure_.num_blocks()) {
    throw DimensionError("commutant element: wrong number of cores");
  }
  for (int k = 0; k < structure_.num_blocks(); ++k) {
    const int n = structure_.block(k).n;
    if (cores_[k].rows() != n || cores_[k].cols() != n) {
      throw DimensionError("commutant element: core " + std::to_string(k + 1) +
                           " must be " + std::to_string(n) + "x" +
                           std::to_string(n));
    }
  }
}

CommutantElement CommutantElement::Identity(const BlockStructure& structure) {
  std::vector<MatrixXd> cores;
  for (const Block& b : structure.blocks()) {
    cores.push_back(MatrixXd::Identity(b.n, b.n));
  }
  return CommutantElement(structure, std::move(cores));
}

CommutantElement CommutantElement::FromAssembled(
    const MatrixXd& m, const BlockStructure& structure) {
  const int dim = structure.total_dim();
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError("matrix size does not match structure dimension");
  }
  std::vector<MatrixXd> cores;
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const int n = structure.block(k).n;
    const int off = structure.offset(k);
    cores.push_back(m.block(off, off, n, n));
  }
  return CommutantElement(structure, std::move(cores));
}

MatrixXd CommutantElement::Assemble() const {
  const int dim = structure_.total_dim();
  MatrixXd out = MatrixXd::Zero(dim, dim);
  for (int k = 0; k < structure_.num_blocks(); ++k) {
    const Block& b = structure_.block(k);
    const int off = structure_.offset(k);
    for (int c = 0; c < b.m; ++c) {
      out.block(off + c * b.n, off + c * b.n, b.n, b.n) = cores_[k];
    }
  }
  return out;
}

CommutantElement CommutantElement::Scaled(double alpha) const {
  std::vector<MatrixXd> cores = cores_;
  for (MatrixXd& c : cores) c *= alpha;
  return CommutantElement(structure_, std::move(cores));
}

CommutantElement CommutantElement::Inverse() const {
  std::vector<MatrixXd> cores;
  for (const MatrixXd& c : cores_) {
    if (c.size() == 0) {
      cores.push_back(c);
      continue;
    }
    Eigen::FullPivLU<MatrixXd> lu(c);
    if (!lu.isInvertible()) {
      throw std::domain_error("commutant element is singular");
    }
    cores.push_back(lu.inverse());
  }
  return CommutantElement(structure_, std::move(cores));
}

CommutantElement CommutantElement::SquareRoot() const {
  std::vector<MatrixXd> cores;
  for (const MatrixXd& c : cores_) {
    if (c.size() == 0) {
      cores.push_back(c);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (c + c.transpose()));
    cores.push_back(es.operatorSqrt());
  }
  return CommutantElement(structure_, std::move(cores));
}

double CommutantElement::MinEigenvalue() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const MatrixXd& c : cores_) {
    if (c.size() == 0) continue;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (c + c.transpose()),
                                               Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Bases and pattern checks

std::vector<CommutantElement> CommutantBasis(const BlockStructure& structure) {
  std::vector<CommutantElement> basis;
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const int n = structure.block(k).n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::vector<MatrixXd> cores;
        for (const Block& b : structure.blocks()) {
          cores.push_back(MatrixXd::Zero(b.n, b.n));
        }
        cores[k](i, j) = 1.0;
        basis.emplace_back(structure, std::move(cores));
      }
    }
  }
  return basis;
}

std::vector<CommutantElement> SymmetricCommutantBasis(
    const BlockStructure& structure) {
  std::vector<CommutantElement> basis;
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const int n = structure.block(k).n;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        std::vector<MatrixXd> cores;
        for (const Block& b : structure.blocks()) {
          cores.push_back(MatrixXd::Zero(b.n, b.n));
        }
        cores[k](i, j) = 1.0;
        cores[k](j, i) = 1.0;
        basis.emplace_back(structure, std::move(cores));
      }
    }
  }
  return basis;
}

namespace {

void CheckSquare(const MatrixXd& m, const BlockStructure& structure) {
  const int dim = structure.total_dim();
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError("matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) +
                         ", structure dimension is " + std::to_string(dim));
  }
}

// Entries outside the diagonal blocks must vanish.
bool OffBlocksVanish(const MatrixXd& m, const BlockStructure& structure,
                     double tol) {
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const int off = structure.offset(k);
    const int dim = structure.block(k).dim();
    for (int l = 0; l < structure.num_blocks(); ++l) {
      if (l == k) continue;
      const auto blk =
          m.block(off, structure.offset(l), dim, structure.block(l).dim());
      if (blk.size() > 0 && blk.cwiseAbs().maxCoeff() > tol) return false;
    }
  }
  return true;
}

}  // namespace

bool IsInCommutant(const MatrixXd& m, const BlockStructure& structure,
                   double tol) {
  CheckSquare(m, structure);
  if (!OffBlocksVanish(m, structure, tol)) return false;
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const Block& b = structure.block(k);
    const int off = structure.offset(k);
    if (b.n == 0) continue;
    const MatrixXd core = m.block(off, off, b.n, b.n);
    for (int r = 0; r < b.m; ++r) {
      for (int c = 0; c < b.m; ++c) {
        const auto blk = m.block(off + r * b.n, off + c * b.n, b.n, b.n);
        const double err = (r == c) ? (blk - core).cwiseAbs().maxCoeff()
                                    : blk.cwiseAbs().maxCoeff();
        if (err > tol) return false;
      }
    }
  }
  return true;
}

bool IsInStructure(const MatrixXd& m, const BlockStructure& structure,
                   double tol) {
  CheckSquare(m, structure);
  if (!OffBlocksVanish(m, structure, tol)) return false;
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const Block& b = structure.block(k);
    const int off = structure.offset(k);
    if (b.n == 0) continue;
    for (int r = 0; r < b.m; ++r) {
      for (int c = 0; c < b.m; ++c) {
        const auto blk = m.block(off + r * b.n, off + c * b.n, b.n, b.n);
        const double delta = blk(0, 0);
        const MatrixXd expected = delta * MatrixXd::Identity(b.n, b.n);
        if ((blk - expected).cwiseAbs().maxCoeff() > tol) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Uncertainty

MatrixXd AssembleUncertainty(const BlockStructure& structure,
                             const std::vector<MatrixXd>& cores) {
  if (static_cast<int>(cores.size()) != structure.num_blocks()) {
    throw DimensionError("uncertainty: wrong number of cores");
  }
  const int dim = structure.total_dim();
  MatrixXd out = MatrixXd::Zero(dim, dim);
  for (int k = 0; k < structure.num_blocks(); ++k) {
    const Block& b = structure.block(k);
    if (cores[k].rows() != b.m || cores[k].cols() != b.m) {
      throw DimensionError("uncertainty: core " + std::to_string(k + 1) +
                           " must be " + std::to_string(b.m) + "x" +
                           std::to_string(b.m));
    }
    const int off = structure.offset(k);
    for (int r = 0; r < b.m; ++r) {
      for (int c = 0; c < b.m; ++c) {
        out.block(off + r * b.n, off + c * b.n, b.n, b.n) =
            cores[k](r, c) * MatrixXd::Identity(b.n, b.n);
      }
    }
  }
  return out;
}

UncertaintySample SampleUncertainty(const BlockStructure& structure,
                                    double radius, std::mt19937_64& rng) {
  if (radius < 0) throw std::invalid_argument("radius must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  UncertaintySample out;
  for (const Block& b : structure.blocks()) {
    MatrixXd core(b.m, b.m);
    for (int i = 0; i < b.m; ++i) {
      for (int j = 0; j < b.m; ++j) core(i, j) = normal(rng);
    }
    const double u = uniform(rng) < 0.5 ? 1.0 : uniform(rng);
    const double s = Eigen::JacobiSVD<MatrixXd>(core).singularValues()(0);
    if (s > 0 && radius > 0) {
      core *= radius * u / s;
    } else {
      core.setZero();
    }
    out.cores.push_back(std::move(core));
  }
  out.assembled = AssembleUncertainty(structure, out.cores);
  return out;
}

UncertaintySample SampleUncertainty(const BlockStructure& structure,
                                    double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return SampleUncertainty(structure, radius, rng);
}

// ---------------------------------------------------------------------------
// Shuffle

BlockStructure ControllerStructure(const BlockStructure& plant,
                                   std::span<const int> ctrl_dims) {
  if (static_cast<int>(ctrl_dims.size()) != plant.num_blocks()) {
    throw DimensionError("controller dimensions: expected " +
                         std::to_string(plant.num_blocks()) + " entries, got " +
                         std::to_string(ctrl_dims.size()));
  }
  std::vector<Block> blocks;
  for (int k = 0; k < plant.num_blocks(); ++k) {
    if (ctrl_dims[k] < 0) {
      throw DimensionError("controller dimensions must be nonnegative");
    }
    const Block& b = plant.block(k);
    blocks.push_back(Block{b.m, ctrl_dims[k], b.full});
  }
  return BlockStructure(std::move(blocks))
      .WithFrequencyBlock(plant.frequency_block());
}

ShufflePermutation::ShufflePermutation(const BlockStructure& plant,
                                       std::span<const int> ctrl_dims)
    : plant_(plant),
      controller_(ControllerStructure(plant, ctrl_dims)),
      ctrl_dims_(ctrl_dims.begin(), ctrl_dims.end()) {
  std::vector<Block> merged;
  for (int k = 0; k < plant.num_blocks(); ++k) {
    const Block& b = plant.block(k);
    merged.push_back(Block{b.m, b.n + ctrl_dims_[k], b.full});
  }
  merged_ = BlockStructure(std::move(merged))
                .WithFrequencyBlock(plant.frequency_block());

  // Inside block k, plant coordinate (r, a) sits at offset + r*n + a and
  // controller coordinate (r, b) at n_total + offset_K + r*n_K + b; in the
  // merged block both land at r*(n + n_K) + {a, n + b}.
  const int n_total = plant.total_dim();
  index_map_.resize(merged_.total_dim());
  for (int k = 0; k < plant.num_blocks(); ++k) {
    const Block& b = plant.block(k);
    const int nk = ctrl_dims_[k];
    const int width = b.n + nk;
    for (int r = 0; r < b.m; ++r) {
      for (int a = 0; a < b.n; ++a) {
        index_map_[merged_.offset(k) + r * width + a] =
            plant.offset(k) + r * b.n + a;
      }
      for (int c = 0; c < nk; ++c) {
        index_map_[merged_.offset(k) + r * width + b.n + c] =
            n_total + controller_.offset(k) + r * nk + c;
      }
    }
  }
}

MatrixXd ShufflePermutation::Matrix() const {
  const int dim = static_cast<int>(index_map_.size());
  MatrixXd p = MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) p(i, index_map_[i]) = 1.0;
  return p;
}

MatrixXd ShufflePermutation::PermuteRows(const MatrixXd& m) const {
  const int dim = static_cast<int>(index_map_.size());
  if (m.rows() != dim) throw DimensionError("shuffle: row count mismatch");
  MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < dim; ++i) out.row(i) = m.row(index_map_[i]);
  return out;
}

MatrixXd ShufflePermutation::PermuteCols(const MatrixXd& m) const {
  const int dim = static_cast<int>(index_map_.size());
  if (m.cols() != dim) throw DimensionError("shuffle: column count mismatch");
  MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < dim; ++i) out.col(i) = m.col(index_map_[i]);
  return out;
}

MatrixXd ShufflePermutation::ToMerged(const MatrixXd& m) const {
  return PermuteCols(PermuteRows(m));
}

MatrixXd ShufflePermutation::FromMerged(const MatrixXd& m) const {
  const int dim = static_cast<int>(index_map_.size());
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError("shuffle: size mismatch");
  }
  MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) out(index_map_[i], index_map_[j]) = m(i, j);
  }
  return out;
}

}  // namespace lft
