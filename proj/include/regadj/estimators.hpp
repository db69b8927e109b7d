#pragma once

// ITT and multiple-regression estimators of the three treatment effects.
//
// The regression is Y on (U, V, W, z) with no intercept. Two independent
// computations are provided:
//   * mr_estimates: residual algebra. Y and z are reduced to within-group
//     residuals e and f, Q = N / D, and effect_S = Y_S - Q z_S.
//   * mr_via_normal_equations: assembles X'X and X'Y and solves the bordered
//     ("arrow") system by a Schur complement on the z row.

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "regadj/assignment.hpp"
#include "regadj/linalg.hpp"

namespace regadj {

struct EffectEstimate {
  Vec3 effects{};

  double operator[](Group g) const noexcept { return effects[index_of(g)]; }
};

struct NominalCovariance {
  double sigma_hat_sq = 0.0;
  /// sigma_hat^2 (X'X)^{-1}, ordered (U, V, W, z).
  Mat4 cov{};
};

struct MREstimate {
  Vec3 effects{};
  double q_hat = 0.0;
  double z_coefficient = 0.0;
  /// |e|^2, |f|^2, e.f.
  double e_norm_sq = 0.0;
  double f_norm_sq = 0.0;
  double e_dot_f = 0.0;
  /// Design summary: group fractions, group means of z, |z|^2 / n.
  Vec3 fractions{};
  Vec3 z_means{};
  double z_mean_sq = 0.0;
  std::size_t n = 0;
  /// Present when n > 4.
  std::optional<NominalCovariance> nominal;

  double operator[](Group g) const noexcept { return effects[index_of(g)]; }
};

/// |f|^2 below this multiple of |z|^2 is a singular design.
inline constexpr double kSingularityThreshold = 1e-12;

EffectEstimate itt_estimates(std::span<const double> y, const Assignment& asg);

/// Residual-algebra path. Throws ErrorCode::kSingularDesign when z is
/// constant within every group.
MREstimate mr_estimates(std::span<const double> z, std::span<const double> y,
                        const Assignment& asg);

/// Normal-equations path with the arrow-structured 4x4 solve.
MREstimate mr_via_normal_equations(std::span<const double> z, std::span<const double> y,
                                   const Assignment& asg);

/// (X'X / n) for the design (U, V, W, z): diagonal (p_A, p_B, p_C, |z|^2/n)
/// bordered by the group means of z.
Mat4 scaled_gram_matrix(std::span<const double> z, const Assignment& asg);

/// sigma_hat^2 = (|e|^2 - Q^2 |f|^2) / (n - 4) and sigma_hat^2 (X'X)^{-1}.
/// Throws kInsufficientDegreesOfFreedom when n <= 4.
NominalCovariance nominal_covariance(const MREstimate& est, std::size_t n);

/// effect_t - effect_s. Throws kInvalidArgument when s == t.
double effect_difference(const Vec3& effects, Group s, Group t);
double effect_difference(const EffectEstimate& est, Group s, Group t);
double effect_difference(const MREstimate& est, Group s, Group t);

}  // namespace regadj
