#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lft/lft.h"
#include "lft/lmi.h"
#include "lft/sdp.h"
#include "lft/structures.h"

namespace lft {

enum class CertificateKind { kQStability, kQPerformance };

/// Certificate sources; each names the inequality family that re-verifies it.
inline constexpr char kSourceQStability[] = "q-stability";
inline constexpr char kSourceQPerformance[] = "q-performance";
inline constexpr char kSourcePerformanceLmis[] = "performance-lmis";
inline constexpr char kSourceStabilizationLmis[] = "stabilization-lmis";
inline constexpr char kSourceUnconstrainedLmis[] = "unconstrained-lmis";

/// A structured certificate. X is in the form A X A^T - X < 0; Y is present
/// for synthesis pairs. `closed_loop` marks a certificate over the merged
/// closed-loop structure.
struct Certificate {
  CertificateKind kind = CertificateKind::kQStability;
  std::string source;
  CommutantElement X;
  std::optional<CommutantElement> Y;
  double margin = 0;
  bool closed_loop = false;
};

struct AnalysisReport {
  bool feasible = false;
  /// Holds the best point found even when infeasible.
  Certificate certificate;
  double margin = 0;
  /// ||Q^{-1} A Q|| (or its performance analogue) with Q = X^{1/2}.
  double scaled_norm = 0;
  std::string binding_constraint;
};

/// A X A^T - X < 0 with X > 0 over `structure`.
LmiProblem BuildQStabilityLmi(const Eigen::MatrixXd& a,
                              const BlockStructure& structure);

/// M diag(X, I) M^T - diag(X, I) < 0 for M = [A B; C D], X > 0. Requires a
/// square channel.
LmiProblem BuildQPerformanceLmi(const LftModel& model);

AnalysisReport CheckQStability(const Eigen::MatrixXd& a,
                               const BlockStructure& structure,
                               const SolverOptions& options = {});

AnalysisReport CheckQPerformance(const LftModel& model,
                                 const SolverOptions& options = {});

/// Margin of `cert` against its rebuilt inequality family. Closed-loop
/// certificates need the controller.
double CertificateMargin(const Certificate& cert,
                         const PartitionedSystem& plant,
                         const Controller* controller = nullptr);

enum class Goal { kStabilization, kPerformance };

enum class SynthesisStatus {
  kSuccess,
  kLmiInfeasible,
  kCouplingFailure,
  kRankFailure,
  kHeuristicFailure,
  kReconstructionGap,
};

const char* ToString(SynthesisStatus status);

struct SynthesisOptions {
  SolverOptions solver;
  int max_heuristic_iter = 100;
  double rank_tol = kRankTol;
};

struct SynthesisOutcome {
  SynthesisStatus status = SynthesisStatus::kLmiInfeasible;
  std::string message;
  std::optional<int> failing_block;
  std::string failing_constraint;
  /// (X, Y) pair; meaningful once the inequalities were solved.
  std::optional<Certificate> certificate;
  std::vector<CouplingBlockReport> coupling;
  /// rank(X_k0 - Y_k0^{-1}) per block.
  std::vector<int> minimal_dims;
  std::optional<Controller> controller;
  std::optional<Certificate> closed_loop;
  int heuristic_iterations = 0;

  bool success() const { return status == SynthesisStatus::kSuccess; }
};

/// Runs the synthesis pipeline for the requested goal and controller
/// dimensions. All-zero dimensions route to StaticSynthesisHeuristic.
/// Throws UnsupportedError when D22 != 0 and DimensionError on malformed
/// input.
SynthesisOutcome Synthesize(const PartitionedSystem& plant, Goal goal,
                            const ControllerDimSpec& dims,
                            const SynthesisOptions& options = {});

/// Static output feedback: cone-complementarity iteration towards Y = X^{-1},
/// accepted only after direct verification of both inequalities at
/// Y = X^{-1}.
SynthesisOutcome StaticSynthesisHeuristic(const PartitionedSystem& plant,
                                          Goal goal,
                                          const SynthesisOptions& options = {});

struct Reconstruction {
  Controller controller;
  Certificate closed_loop;
  /// Margin of the controller inequality.
  double k_margin = 0;
};

/// Completes (X, Y) to a closed-loop certificate with controller dimensions
/// `ctrl_dims`, solves the controller inequality and re-certifies the closed
/// loop. Throws ReconstructionError on failure.
Reconstruction ReconstructController(const PartitionedSystem& plant,
                                     const CommutantElement& x,
                                     const CommutantElement& y,
                                     const std::vector<int>& ctrl_dims,
                                     Goal goal,
                                     const SynthesisOptions& options = {});

enum class PresetKind { kStructuredUncertainty, kLpv };

/// Controller dimensions for the two application settings: no controller
/// dynamics in uncertainty blocks (only the frequency block is free), or
/// free dynamics everywhere (gain scheduling). Throws StructureError without
/// a frequency block.
ControllerDimSpec ApplicationPreset(PresetKind kind,
                                    const BlockStructure& structure);

}  // namespace lft
