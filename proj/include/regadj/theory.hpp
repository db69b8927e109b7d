#pragma once

// Closed-form quantities: exact moments of group means, the exact variance
// of ITT contrasts, the finite-population bias coefficient K, and the
// asymptotic covariance, nominal variance and adjustment gain.

#include <array>
#include <span>
#include <string_view>

#include "regadj/assignment.hpp"
#include "regadj/linalg.hpp"
#include "regadj/population.hpp"

namespace regadj {

/// Exact moments of group means over the randomization distribution.
struct GroupMeanMoments {
  /// E(x_S).
  double expectation = 0.0;
  /// var(x_S).
  double variance = 0.0;
  /// cov(x_S, y_S).
  double covariance_same = 0.0;
  /// cov(x_S, y_T); equals covariance_same when s == t.
  double covariance_cross = 0.0;
};

GroupMeanMoments prop1_moments(std::span<const double> x, std::span<const double> y,
                               const GroupSizes& sizes, Group s, Group t);

GroupMeanMoments prop1_moments(const Population& pop, const GroupSizes& sizes, Var x,
                               Var y, Group s, Group t);

/// Exact variance of the ITT contrast Y_T - Y_S.
double itt_pair_variance(const Population& pop, const GroupSizes& sizes, Group s, Group t);

/// p_A mean(az) + p_B mean(bz) + p_C mean(cz) with finite-sample fractions.
double q_tilde(const Population& pop, const GroupSizes& sizes);

/// K_S = cov(x_S z, z) - sum_T p_T cov(x_T z, z), x_S the response to S.
///
/// With `center_responses` (the default) the responses are centered first, so
/// K is invariant to shifting a, b or c. The uncentered value is available for
/// comparison only.
Vec3 bias_K(const Population& pop, const GroupSizes& sizes, bool center_responses = true);

/// Limiting fractions and moments. <z> = 0 and <z^2> = 1 are structural.
struct AsymptoticSpec {
  Vec3 p{};
  /// <a>, <b>, <c>.
  Vec3 mean{};
  /// <xy> for x, y in {a, b, c} (raw second moments).
  Mat3 second{};
  /// <az>, <bz>, <cz>.
  Vec3 cross_z{};

  /// Builds a spec from means, covariances among responses, and cov(x, z).
  static AsymptoticSpec from_covariances(const Vec3& p, const Vec3& mean, const Mat3& cov,
                                         const Vec3& cov_z);

  /// Covariance of responses: <xy> - <x><y>.
  Mat3 response_covariance() const;
  /// Covariance matrix of (a, b, c, z).
  Mat4 full_covariance() const;

  /// Throws kInconsistentSpec when fractions do not sum to 1, are not all
  /// positive, or the covariance of (a, b, c, z) is not PSD to 1e-9.
  void validate() const;

  /// <x^2> > <x>^2 for every response.
  bool has_positive_variances() const;
};

struct SigmaResult {
  double Q = 0.0;
  Mat3 Sigma{};
};

struct NominalAsymptotics {
  double sigma_sq = 0.0;
  Vec4 D{};
  Mat4 sigma_sq_D_inverse{};
};

enum class GainVerdict { kHelps, kHurts, kNeutral };

std::string_view to_string(GainVerdict v) noexcept;

struct AdjustmentGain {
  double Gamma = 0.0;
  GainVerdict verdict = GainVerdict::kNeutral;
  /// p_s p_t, so that the variance gain at size n is Gamma / (n p_s p_t).
  double fraction_product = 1.0;

  double variance_gain(double n) const { return Gamma / (n * fraction_product); }
};

/// |Gamma| at or below this is reported as neutral.
inline constexpr double kNeutralGainTolerance = 1e-12;

double limiting_q(const AsymptoticSpec& spec);

SigmaResult sigma_matrix(const AsymptoticSpec& spec);

/// Contrast variance Sigma_tt + Sigma_ss - 2 Sigma_st.
double contrast_variance(const Mat3& m, Group s, Group t);
double contrast_variance(const Mat4& m, Group s, Group t);

/// Throws kInconsistentSpec when sigma^2 < -1e-9.
NominalAsymptotics nominal_asymptotics(const AsymptoticSpec& spec);

/// Gamma for the contrast of t against s. The pair (A, C) is the textbook
/// case; other pairs follow by relabeling the roles of the groups.
AdjustmentGain adjustment_gain(const AsymptoticSpec& spec, Group s = Group::A,
                               Group t = Group::C);

/// Asymptotic n * var of the ITT contrast Y_T - Y_S.
double itt_asymptotic_contrast_variance(const AsymptoticSpec& spec, Group s, Group t);

/// Treats the finite population as its own limit, with p_S = n_S / n.
AsymptoticSpec plugin_spec(const Population& pop, const GroupSizes& sizes);

struct TheoryReport {
  MomentSet moments;
  double Q_tilde = 0.0;
  Vec3 K{};
  Vec3 K_uncentered{};
  /// Exact ITT contrast variances for (A,B), (A,C), (B,C).
  Vec3 itt_pair_variances{};
  double Q = 0.0;
  Mat3 Sigma{};
  double sigma_sq = 0.0;
  Vec4 D{};
  Mat4 nominal_asym{};
  Group pair_s = Group::A;
  Group pair_t = Group::C;
  AdjustmentGain gain;
};

TheoryReport theory_report(const Population& pop, const GroupSizes& sizes,
                           Group s = Group::A, Group t = Group::C);

}  // namespace regadj
