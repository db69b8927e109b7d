#pragma once

// Built-in reference populations and limiting specifications.

#include "regadj/linalg.hpp"
#include "regadj/population.hpp"
#include "regadj/theory.hpp"

namespace regadj::scenarios {

/// Six subjects, additive effects (b - a = 1, c - a = 2), z = (0,0,0,-2,-2,4).
Population table1_population();

/// Published averages of the regression estimates over the enumerated
/// assignments for table1_population() with sizes (1, 1, 4).
struct Table2Reference {
  Vec3 average_mr{3.3825, 1.9965, 2.9053};
  double average_z_coefficient = -0.0105;
  Vec3 truth{1.3333, 2.3333, 3.3333};
  /// Published values carry four decimals.
  double tolerance = 5e-4;
};

/// Six subjects whose responses average to their population means within each
/// level of z = (0,0,0,1,1,1) (before normalization).
Population conditional_constancy_population();

/// Identity covariance for (a, b, c, z), centered, p = (1/4, 1/2, 1/4);
/// var(b) replaced by var_b.
AsymptoticSpec example2_spec(double var_b = 1.0);

/// Additive spec: common response variance v, cov(x, z) = q for every
/// response, correlation among responses v (so they move together).
AsymptoticSpec additive_spec(const Vec3& p, double v, double q);

/// Balanced spec with z = a + b + c and uncorrelated responses:
/// <az> = var_a, <bz> = var_b, <cz> = var_c.
AsymptoticSpec example4_spec(double var_a, double var_b, double var_c);

}  // namespace regadj::scenarios
