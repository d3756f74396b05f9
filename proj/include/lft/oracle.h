#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lft/lft.h"
#include "lft/structures.h"

namespace lft {

/// Sampling falsifies robustness claims; it never proves them.
inline constexpr int kDefaultSamples = 10000;
/// A real eigenvalue of Delta A at or above 1 - kBoundTol makes I - s Delta A
/// singular for some s in (0, 1]; a norm at or above 1 - kBoundTol attains
/// the performance bound.
inline constexpr double kBoundTol = 1e-12;
/// Violations kept in a report; `violation_count` has the full tally.
inline constexpr int kMaxStoredViolations = 16;

enum class ViolationKind { kStability, kPerformance };

struct Violation {
  ViolationKind kind = ViolationKind::kStability;
  int sample = 0;
  /// The violating load: the singular point Delta / lambda on the sampled
  /// ray for stability, the sample itself for performance.
  Eigen::MatrixXd delta;
  /// sigma_min(I - delta A) for stability, the attained norm for performance.
  double value = 0;
};

struct OracleReport {
  int samples = 0;
  double radius = 1;
  std::uint64_t seed = 0;
  double worst_sigma_min = 0;
  double max_spectral_radius = 0;
  /// Largest sampled ||F_u||; NaN for stability-only reports.
  double worst_norm = 0;
  bool bound_attained = false;
  int violation_count = 0;
  std::vector<Violation> violations;
  /// Closed-loop checks: largest relative gap between the realization and
  /// the nested-LFT evaluation, and how many samples were compared.
  double max_path_discrepancy = 0;
  int compared_samples = 0;
  /// Closed-loop checks: every coupled load had the merged structure.
  bool coupling_consistent = true;

  bool violated() const { return violation_count > 0; }
  /// "no violation found in N samples" or the count of violations.
  std::string Verdict() const;
};

/// Draws n samples from the radius ball of `structure` (sample i seeded from
/// (seed, i)) and tests invertibility of I - s Delta A for s in [0, 1].
OracleReport SampleRobustStability(const Eigen::MatrixXd& a,
                                   const BlockStructure& structure,
                                   int n_samples, std::uint64_t seed,
                                   double radius = 1.0);

/// Stability test on A plus the spectral norm of the upper LFT against 1.
/// Requires a square channel.
OracleReport SampleRobustPerformance(const LftModel& model, int n_samples,
                                     std::uint64_t seed, double radius = 1.0);

/// Closed loop under coupled loads diag(Delta, Delta_K) sharing the plant
/// cores. The norm comes from the closed-loop realization and is cross-checked
/// against the lower LFT of the uncertain plant with the uncertain controller.
/// Without performance channels only stability is tested.
OracleReport ClosedLoopGainCheck(const PartitionedSystem& plant,
                                 const Controller& controller, int n_samples,
                                 std::uint64_t seed, double radius = 1.0);

/// Seed of sample `index` in the stream `seed`.
std::uint64_t SampleSeed(std::uint64_t seed, std::uint64_t index);

}  // namespace lft
