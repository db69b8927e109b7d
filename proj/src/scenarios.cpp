#include "regadj/scenarios.hpp"

namespace regadj::scenarios {

Population table1_population() {
  return Population({0, 0, 0, 2, 2, 4}, {1, 1, 1, 3, 3, 5}, {2, 2, 2, 4, 4, 6},
                    {0, 0, 0, -2, -2, 4});
}

Population conditional_constancy_population() {
  // Levels z = 0 (subjects 1-3) and z = 1 (subjects 4-6); every response
  // averages to 0 within each level.
  return Population({1, -1, 0, 2, -2, 0}, {3, -3, 0, 1, -1, 0}, {1, 1, -2, 0, 4, -4},
                    {0, 0, 0, 1, 1, 1});
}

AsymptoticSpec example2_spec(double var_b) {
  Mat3 cov{};
  cov[0][0] = 1.0;
  cov[1][1] = var_b;
  cov[2][2] = 1.0;
  return AsymptoticSpec::from_covariances({0.25, 0.5, 0.25}, {0, 0, 0}, cov, {0, 0, 0});
}

AsymptoticSpec additive_spec(const Vec3& p, double v, double q) {
  Mat3 cov{};
  for (auto& row : cov) row.fill(v);
  return AsymptoticSpec::from_covariances(p, {0, 0, 0}, cov, {q, q, q});
}

AsymptoticSpec example4_spec(double var_a, double var_b, double var_c) {
  Mat3 cov{};
  cov[0][0] = var_a;
  cov[1][1] = var_b;
  cov[2][2] = var_c;
  const double third = 1.0 / 3.0;
  return AsymptoticSpec::from_covariances({third, third, third}, {0, 0, 0}, cov,
                                          {var_a, var_b, var_c});
}

}  // namespace regadj::scenarios
