#include "regadj/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "regadj/error.hpp"
#include "regadj/summation.hpp"

namespace regadj {

namespace {

void require_lengths(std::span<const double> z, std::span<const double> y,
                     const Assignment& asg) {
  if (z.size() != asg.size() || y.size() != asg.size()) {
    throw Error(ErrorCode::kSizeMismatch,
                "size mismatch: covariate, response and assignment lengths differ");
  }
}

[[noreturn]] void throw_singular() {
  throw Error(ErrorCode::kSingularDesign,
              "singular design: z is constant within every treatment group");
}

}  // namespace

EffectEstimate itt_estimates(std::span<const double> y, const Assignment& asg) {
  return EffectEstimate{group_means(y, asg)};
}

MREstimate mr_estimates(std::span<const double> z, std::span<const double> y,
                        const Assignment& asg) {
  require_lengths(z, y, asg);
  const std::size_t n = asg.size();
  const auto nd = static_cast<double>(n);

  // Group means of y, z, yz and the overall mean square of z.
  std::array<CompensatedSum, 3> sy, sz, syz;
  CompensatedSum szz;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = index_of(asg[i]);
    sy[g].add(y[i]);
    sz[g].add(z[i]);
    syz[g].add(y[i] * z[i]);
    szz.add(z[i] * z[i]);
  }

  MREstimate est;
  est.n = n;
  est.z_mean_sq = szz.value() / nd;
  Vec3 y_means{}, yz_means{};
  for (Group g : kAllGroups) {
    const auto k = index_of(g);
    const auto ng = static_cast<double>(asg.sizes()[g]);
    est.fractions[k] = ng / nd;
    y_means[k] = sy[k].value() / ng;
    est.z_means[k] = sz[k].value() / ng;
    yz_means[k] = syz[k].value() / ng;
  }

  // Within-group residuals e (of Y) and f (of z).
  CompensatedSum ee, ff, ef;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = index_of(asg[i]);
    const double e = y[i] - y_means[g];
    const double f = z[i] - est.z_means[g];
    ee.add(e * e);
    ff.add(f * f);
    ef.add(e * f);
  }
  est.e_norm_sq = ee.value();
  est.f_norm_sq = ff.value();
  est.e_dot_f = ef.value();
  if (est.f_norm_sq <= kSingularityThreshold * szz.value()) throw_singular();

  // Q = N / D with N = sum p_S [(yz)_S - y_S z_S], D = |z|^2/n - sum p_S z_S^2.
  CompensatedSum numer;
  CompensatedSum denom(est.z_mean_sq);
  for (std::size_t k = 0; k < 3; ++k) {
    numer.add(est.fractions[k] * (yz_means[k] - y_means[k] * est.z_means[k]));
    denom.add(-est.fractions[k] * est.z_means[k] * est.z_means[k]);
  }
  est.q_hat = numer.value() / denom.value();
  est.z_coefficient = est.q_hat;
  for (std::size_t k = 0; k < 3; ++k) est.effects[k] = y_means[k] - est.q_hat * est.z_means[k];

  if (n > 4) est.nominal = nominal_covariance(est, n);
  return est;
}

Mat4 scaled_gram_matrix(std::span<const double> z, const Assignment& asg) {
  if (z.size() != asg.size()) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: covariate and assignment differ");
  }
  const auto nd = static_cast<double>(asg.size());
  std::array<CompensatedSum, 3> count, border;
  CompensatedSum corner;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (Group g : kAllGroups) {
      const double d = asg.dummy(g, i);
      count[index_of(g)].add(d * d);
      border[index_of(g)].add(d * z[i]);
    }
    corner.add(z[i] * z[i]);
  }
  Mat4 m = zero_matrix<4>();
  for (std::size_t k = 0; k < 3; ++k) {
    m[k][k] = count[k].value() / nd;
    m[k][3] = m[3][k] = border[k].value() / nd;
  }
  m[3][3] = corner.value() / nd;
  return m;
}

MREstimate mr_via_normal_equations(std::span<const double> z, std::span<const double> y,
                                   const Assignment& asg) {
  require_lengths(z, y, asg);
  const std::size_t n = asg.size();
  const auto nd = static_cast<double>(n);

  const Mat4 gram = scaled_gram_matrix(z, asg);
  std::array<CompensatedSum, 4> xty;
  for (std::size_t i = 0; i < n; ++i) {
    for (Group g : kAllGroups) xty[index_of(g)].add(asg.dummy(g, i) * y[i]);
    xty[3].add(z[i] * y[i]);
  }
  Vec4 rhs{};
  for (std::size_t k = 0; k < 4; ++k) rhs[k] = xty[k].value() / nd;

  // Arrow system [diag(d) b; b' c]: eliminate the dummies, solve the z row by
  // its Schur complement, back-substitute.
  Vec3 w{};
  CompensatedSum schur(gram[3][3]);
  CompensatedSum reduced_rhs(rhs[3]);
  for (std::size_t k = 0; k < 3; ++k) {
    w[k] = gram[k][3] / gram[k][k];
    schur.add(-gram[k][3] * w[k]);
    reduced_rhs.add(-w[k] * rhs[k]);
  }
  const double s = schur.value();
  if (s <= kSingularityThreshold * gram[3][3]) throw_singular();

  MREstimate est;
  est.n = n;
  est.z_coefficient = reduced_rhs.value() / s;
  est.q_hat = est.z_coefficient;
  for (std::size_t k = 0; k < 3; ++k) {
    est.effects[k] = (rhs[k] - gram[k][3] * est.z_coefficient) / gram[k][k];
    est.fractions[k] = gram[k][k];
    est.z_means[k] = w[k];
  }
  est.z_mean_sq = gram[3][3];

  CompensatedSum rss;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - est.effects[index_of(asg[i])] - est.z_coefficient * z[i];
    rss.add(r * r);
  }
  est.f_norm_sq = nd * s;
  est.e_dot_f = est.z_coefficient * est.f_norm_sq;
  est.e_norm_sq = rss.value() + est.z_coefficient * est.z_coefficient * est.f_norm_sq;

  if (n > 4) {
    NominalCovariance nom;
    nom.sigma_hat_sq = rss.value() / (nd - 4.0);
    // (X'X)^{-1} = (n G)^{-1} from the block inverse of the arrow matrix.
    Mat4 inv = zero_matrix<4>();
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        inv[j][k] = (j == k ? 1.0 / gram[j][j] : 0.0) + w[j] * w[k] / s;
      }
      inv[j][3] = inv[3][j] = -w[j] / s;
    }
    inv[3][3] = 1.0 / s;
    for (auto& row : inv)
      for (double& v : row) v *= nom.sigma_hat_sq / nd;
    nom.cov = inv;
    est.nominal = nom;
  }
  return est;
}

NominalCovariance nominal_covariance(const MREstimate& est, std::size_t n) {
  if (n <= 4) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom,
                "insufficient degrees of freedom: n = " + std::to_string(n) +
                    " leaves none after fitting four coefficients");
  }
  if (!(est.f_norm_sq > 0.0)) throw_singular();

  const auto nd = static_cast<double>(n);
  // e - Q f is orthogonal to f, so |e - Q f|^2 = |e|^2 - Q^2 |f|^2.
  const double rss =
      std::max(0.0, est.e_norm_sq - est.q_hat * est.q_hat * est.f_norm_sq);

  NominalCovariance nom;
  nom.sigma_hat_sq = rss / (nd - 4.0);

  const double f2 = est.f_norm_sq;
  Mat4 inv = zero_matrix<4>();
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 3; ++k) {
      inv[j][k] = est.z_means[j] * est.z_means[k] / f2;
    }
    inv[j][j] += 1.0 / (est.fractions[j] * nd);
    inv[j][3] = inv[3][j] = -est.z_means[j] / f2;
  }
  inv[3][3] = 1.0 / f2;
  for (auto& row : inv)
    for (double& v : row) v *= nom.sigma_hat_sq;
  nom.cov = inv;
  return nom;
}

double effect_difference(const Vec3& effects, Group s, Group t) {
  if (s == t) {
    throw Error(ErrorCode::kInvalidArgument, "effect difference needs two distinct groups");
  }
  return effects[index_of(t)] - effects[index_of(s)];
}

double effect_difference(const EffectEstimate& est, Group s, Group t) {
  return effect_difference(est.effects, s, t);
}

double effect_difference(const MREstimate& est, Group s, Group t) {
  return effect_difference(est.effects, s, t);
}

}  // namespace regadj
