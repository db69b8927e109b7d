#pragma once

// Test-only oracles. Nothing here calls into the enumeration or estimator
// code paths that the tests check.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "regadj/assignment.hpp"
#include "regadj/population.hpp"
#include "regadj/rng.hpp"

namespace regadj::testing {

inline Population random_population(CounterRng& rng, std::size_t n, double lo = -5.0,
                                    double hi = 5.0) {
  std::array<std::vector<double>, 4> cols;
  for (auto& col : cols) {
    col.resize(n);
    for (double& x : col) x = rng.uniform(lo, hi);
  }
  return Population(cols[0], cols[1], cols[2], cols[3]);
}

/// Every labeling with the given sizes, found by filtering all 3^n label
/// vectors. Exponential; only for n <= 10.
inline std::vector<std::vector<Group>> brute_force_labelings(const GroupSizes& sizes) {
  const std::size_t n = sizes.total();
  std::vector<std::vector<Group>> out;
  std::vector<Group> labels(n, Group::A);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      labels[n - 1 - i] = static_cast<Group>(c % 3);
      ++counts[c % 3];
      c /= 3;
    }
    if (counts[0] == sizes[Group::A] && counts[1] == sizes[Group::B] &&
        counts[2] == sizes[Group::C]) {
      out.push_back(labels);
    }
  }
  return out;
}

/// All positive (n_A, n_B, n_C) summing to n.
inline std::vector<GroupSizes> all_size_triples(std::size_t n) {
  std::vector<GroupSizes> out;
  for (std::size_t a = 1; a + 2 <= n; ++a)
    for (std::size_t b = 1; a + b + 1 <= n; ++b) out.emplace_back(a, b, n - a - b);
  return out;
}

/// Plain mean of a group's values, no compensation.
inline double naive_group_mean(const std::vector<double>& x, const std::vector<Group>& labels,
                               Group g) {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (labels[i] == g) {
      s += x[i];
      ++k;
    }
  }
  return s / static_cast<double>(k);
}

struct LeastSquaresOracle {
  Eigen::Vector4d beta;
  double sigma_hat_sq = 0.0;
  Eigen::Matrix4d nominal_cov;
  Eigen::VectorXd residuals;
};

/// Dense QR least squares of y on (U, V, W, z).
inline LeastSquaresOracle least_squares_oracle(std::span<const double> z,
                                               std::span<const double> y,
                                               std::span<const Group> labels) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 4);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
    X(i, 3) = z[static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  LeastSquaresOracle out;
  out.beta = X.colPivHouseholderQr().solve(Y);
  out.residuals = Y - X * out.beta;
  out.sigma_hat_sq = n > 4 ? out.residuals.squaredNorm() / static_cast<double>(n - 4) : 0.0;
  out.nominal_cov = out.sigma_hat_sq * (X.transpose() * X).inverse();
  return out;
}

/// Moments of f(labeling) over the uniform distribution on `labelings`.
struct EnumeratedMoments {
  double mean = 0.0;
  double var = 0.0;
};

inline double enumerated_mean(const std::vector<std::vector<Group>>& labelings,
                              const std::function<double(const std::vector<Group>&)>& f) {
  long double s = 0.0L;
  for (const auto& l : labelings) s += f(l);
  return static_cast<double>(s / labelings.size());
}

inline double enumerated_cov(const std::vector<std::vector<Group>>& labelings,
                             const std::function<double(const std::vector<Group>&)>& f,
                             const std::function<double(const std::vector<Group>&)>& g) {
  const double mf = enumerated_mean(labelings, f);
  const double mg = enumerated_mean(labelings, g);
  long double s = 0.0L;
  for (const auto& l : labelings) s += (f(l) - mf) * (g(l) - mg);
  return static_cast<double>(s / labelings.size());
}

}  // namespace regadj::testing
