#pragma once

// Exact (exhaustive) and Monte Carlo randomization distributions of the ITT
// and multiple-regression estimators, plus the order diagnostics that tie
// simulation output back to the closed-form theory.
//
// Both engines split work into fixed rank/replicate ranges and store one
// record per assignment or replicate; summaries are reduced sequentially in
// index order with compensated sums. Results therefore never depend on the
// number of worker threads.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "regadj/assignment.hpp"
#include "regadj/linalg.hpp"
#include "regadj/population.hpp"

namespace regadj {

struct EstimatorSummary {
  Vec3 expectation{};
  Vec3 bias{};
  Mat3 cov{};
};

struct ExactRecord {
  std::uint64_t rank = 0;
  Vec3 itt{};
  Vec3 mr{};
  double q_hat = 0.0;
  double sigma_hat_sq = 0.0;
  bool singular = false;
};

struct ExactOptions {
  EnumerationMode mode = EnumerationMode::kAll;
  std::uint64_t limit = kDefaultEnumerationLimit;
  unsigned threads = 1;
  bool keep_table = false;
};

struct ExactSummary {
  /// Emitted assignments, singular ones included.
  std::uint64_t assignment_count = 0;
  /// Assignments with |f| = 0, excluded from the MR summary.
  std::uint64_t singular_count = 0;
  /// (mean a, mean b, mean c).
  Vec3 truth{};
  /// Over every emitted assignment.
  EstimatorSummary itt;
  /// Over non-singular assignments only.
  EstimatorSummary mr;
  double mean_q_hat = 0.0;
  /// NaN when n <= 4.
  double mean_sigma_hat_sq = 0.0;
  /// Per-assignment rows in rank order when ExactOptions::keep_table is set.
  std::vector<ExactRecord> table;
};

/// Throws EnumerationTooLarge, or kAllAssignmentsSingular when no emitted
/// assignment admits the regression.
ExactSummary exact_distribution(const Population& pop, const GroupSizes& sizes,
                                const ExactOptions& options = {});

struct ReplicateRecord {
  /// Singular draws discarded before this replicate's assignment.
  std::uint32_t redraws = 0;
  Vec3 itt{};
  Vec3 mr{};
  double q_hat = 0.0;
  double sigma_hat_sq = 0.0;
  /// Upper triangle of the nominal covariance, row-major (10 entries).
  std::array<double, 10> nominal{};
  /// Lead term sqrt(n) (x_S,S - mean x_S - Q~ z_S).
  Vec3 zeta{};
  /// (beta_MR - beta) - zeta / sqrt(n) + K / (n - 1).
  Vec3 rho{};
  /// max_S |(x_S z)_S - mean(x_S z)|.
  double concentration = 0.0;
};

struct MonteCarloOptions {
  std::uint64_t reps = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool keep_records = false;
  /// Per replicate; exceeding it raises kAllAssignmentsSingular.
  std::uint32_t max_redraws = 10'000;
};

struct MCEstimatorSummary {
  Vec3 mean{};
  Vec3 bias{};
  Mat3 cov{};
  /// Standard errors of the Monte Carlo means.
  Vec3 mean_se{};
};

struct MCSummary {
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  std::uint64_t singular_redraws = 0;
  std::size_t n = 0;
  Vec3 truth{};
  MCEstimatorSummary itt;
  MCEstimatorSummary mr;
  double mean_q_hat = 0.0;
  double q_hat_se = 0.0;
  /// NaN when n <= 4, as are the nominal fields.
  double mean_sigma_hat_sq = 0.0;
  double sigma_hat_sq_se = 0.0;
  Mat4 mean_nominal_cov{};
  Mat4 nominal_cov_se{};
  double Q_tilde = 0.0;
  Vec3 K{};
  Vec3 zeta_mean{};
  Mat3 zeta_cov{};
  Vec3 zeta_skewness{};
  Vec3 zeta_kurtosis{};
  Vec3 rho_mean{};
  Vec3 rho_se{};
  double concentration_mean = 0.0;
  double concentration_max = 0.0;
  std::vector<ReplicateRecord> records;
};

/// Replicate r uses CounterRng::stream(seed, r). Singular draws are redrawn
/// from the same stream and counted. Throws kInvalidArgument when reps < 2.
MCSummary monte_carlo(const Population& pop, const GroupSizes& sizes,
                      const MonteCarloOptions& options);

struct OrderCheckRow {
  std::size_t m = 0;
  std::size_t n = 0;
  Vec3 K{};
  /// (n - 1) times the Monte Carlo bias of MR, and its standard error.
  Vec3 bias_scaled{};
  Vec3 bias_scaled_se{};
  bool bias_within_4se = false;
  /// Plug-in Sigma and the Monte Carlo covariance of sqrt(n)(beta_MR - beta).
  Mat3 sigma_plugin{};
  Mat3 sigma_mc{};
  double sigma_sq = 0.0;
  double mean_sigma_hat_sq = 0.0;
  double sigma_hat_sq_se = 0.0;
  /// Mean of rho: an unbiased estimate of E[beta_MR - beta] + K / (n - 1).
  Vec3 residual{};
  Vec3 residual_se{};
  double residual_norm = 0.0;
  double concentration_mean = 0.0;
};

struct OrderCheckResult {
  std::vector<OrderCheckRow> rows;
  /// Least-squares slope of log residual_norm against log n.
  double residual_slope = 0.0;
  bool all_bias_within_4se = false;
  bool concentration_shrinks = false;
};

struct OrderCheckOptions {
  std::vector<std::size_t> m_values;
  std::uint64_t reps = 10'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Replicates `base` m times for each m (sizes scaled alike) and compares
/// simulation with theory at each n = m * n0. `base` should have centered,
/// normalized z; m_values must be increasing.
OrderCheckResult order_checks(const Population& base, const GroupSizes& base_sizes,
                              const OrderCheckOptions& options);

/// Writes `assignment,itt_A,itt_B,itt_C,mr_A,mr_B,mr_C,q_hat,sigma_hat_sq`
/// rows; singular rows carry empty MR fields.
void write_exact_table(std::ostream& out, const ExactSummary& summary,
                       const AssignmentEnumerator& enumerator);

/// Writes `replicate,itt_A,...,q_hat,sigma_hat_sq` rows.
void write_replicate_table(std::ostream& out, const MCSummary& summary);

// Constructed populations. Columns are built from orthogonal +/-1 sign
// patterns of period 8, so moments are exact at every n divisible by 8.

/// a, c, z orthonormal, var(b) = var_b, b orthogonal to the rest, all means 0.
Population make_example2_population(std::size_t n, double var_b);

/// Additive effects (b = a + 1, c = a + 2) with var(a) = 1 and
/// cov(a, z) = correlation; z normalized.
Population make_additive_population(std::size_t n, double correlation);

/// Uncorrelated a, b, c with var(b) = var_b, var(a) = var(c) = (1 - var_b) / 2,
/// and z = a + b + c (so var(z) = 1). Requires 0 < var_b < 1.
Population make_example4_population(std::size_t n, double var_b);

}  // namespace regadj
