#include "regadj/theory.hpp"

#include <algorithm>
#include <cmath>

#include "regadj/error.hpp"
#include "regadj/summation.hpp"

namespace regadj {

namespace {

double population_cov(std::span<const double> x, std::span<const double> y) {
  const double mx = compensated_mean(x);
  const double my = compensated_mean(y);
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add((x[i] - mx) * (y[i] - my));
  return s.value() / static_cast<double>(x.size());
}

double odds(double p) { return (1.0 - p) / p; }

}  // namespace

GroupMeanMoments prop1_moments(std::span<const double> x, std::span<const double> y,
                               const GroupSizes& sizes, Group s, Group t) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: variables differ in length");
  }
  sizes.require_total(x.size());
  const auto n = static_cast<double>(x.size());
  const double p = sizes.fraction(s);
  const double cxy = population_cov(x, y);

  GroupMeanMoments m;
  m.expectation = compensated_mean(x);
  m.variance = odds(p) * population_cov(x, x) / (n - 1.0);
  m.covariance_same = odds(p) * cxy / (n - 1.0);
  m.covariance_cross = s == t ? m.covariance_same : -cxy / (n - 1.0);
  return m;
}

GroupMeanMoments prop1_moments(const Population& pop, const GroupSizes& sizes, Var x,
                               Var y, Group s, Group t) {
  return prop1_moments(pop[x], pop[y], sizes, s, t);
}

double itt_pair_variance(const Population& pop, const GroupSizes& sizes, Group s, Group t) {
  if (s == t) throw Error(ErrorCode::kInvalidArgument, "contrast needs two distinct groups");
  sizes.require_total(pop.size());
  const auto n = static_cast<double>(pop.size());
  const auto xs = pop.response(index_of(s));
  const auto xt = pop.response(index_of(t));
  return (odds(sizes.fraction(s)) * population_cov(xs, xs) +
          odds(sizes.fraction(t)) * population_cov(xt, xt) + 2.0 * population_cov(xs, xt)) /
         (n - 1.0);
}

double q_tilde(const Population& pop, const GroupSizes& sizes) {
  sizes.require_total(pop.size());
  const auto z = pop.z();
  CompensatedSum q;
  for (Group g : kAllGroups) {
    const auto x = pop.response(index_of(g));
    CompensatedSum cross;
    for (std::size_t i = 0; i < z.size(); ++i) cross.add(x[i] * z[i]);
    q.add(sizes.fraction(g) * cross.value() / static_cast<double>(z.size()));
  }
  return q.value();
}

Vec3 bias_K(const Population& pop, const GroupSizes& sizes, bool center_responses) {
  sizes.require_total(pop.size());
  const auto z = pop.z();
  const std::size_t n = z.size();

  Vec3 product_cov{};
  std::vector<double> product(n);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto x = pop.response(r);
    const double shift = center_responses ? compensated_mean(x) : 0.0;
    for (std::size_t i = 0; i < n; ++i) product[i] = (x[i] - shift) * z[i];
    product_cov[r] = population_cov(product, z);
  }

  CompensatedSum weighted;
  for (Group g : kAllGroups) weighted.add(sizes.fraction(g) * product_cov[index_of(g)]);
  Vec3 K{};
  for (std::size_t r = 0; r < 3; ++r) K[r] = product_cov[r] - weighted.value();
  return K;
}

AsymptoticSpec AsymptoticSpec::from_covariances(const Vec3& p, const Vec3& mean,
                                                const Mat3& cov, const Vec3& cov_z) {
  AsymptoticSpec spec;
  spec.p = p;
  spec.mean = mean;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) spec.second[i][j] = cov[i][j] + mean[i] * mean[j];
  spec.cross_z = cov_z;
  return spec;
}

Mat3 AsymptoticSpec::response_covariance() const {
  Mat3 c{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) c[i][j] = second[i][j] - mean[i] * mean[j];
  return c;
}

Mat4 AsymptoticSpec::full_covariance() const {
  const Mat3 c = response_covariance();
  Mat4 m = zero_matrix<4>();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) m[i][j] = c[i][j];
    m[i][3] = m[3][i] = cross_z[i];
  }
  m[3][3] = 1.0;
  return m;
}

void AsymptoticSpec::validate() const {
  for (double pi : p) {
    if (!(pi > 0.0)) throw Error(ErrorCode::kInconsistentSpec, "limit fractions must be positive");
  }
  if (std::fabs(p[0] + p[1] + p[2] - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInconsistentSpec, "limit fractions must sum to 1");
  }
  if (!is_positive_semidefinite(full_covariance(), 1e-9)) {
    throw Error(ErrorCode::kInconsistentSpec,
                "inconsistent spec: covariance of (a, b, c, z) is not positive semidefinite");
  }
}

bool AsymptoticSpec::has_positive_variances() const {
  for (std::size_t i = 0; i < 3; ++i)
    if (!(second[i][i] > mean[i] * mean[i])) return false;
  return true;
}

std::string_view to_string(GainVerdict v) noexcept {
  switch (v) {
    case GainVerdict::kHelps: return "adjustment helps";
    case GainVerdict::kHurts: return "adjustment hurts";
    case GainVerdict::kNeutral: return "adjustment neutral";
  }
  return "?";
}

double limiting_q(const AsymptoticSpec& spec) {
  return spec.p[0] * spec.cross_z[0] + spec.p[1] * spec.cross_z[1] + spec.p[2] * spec.cross_z[2];
}

SigmaResult sigma_matrix(const AsymptoticSpec& spec) {
  spec.validate();
  SigmaResult r;
  r.Q = limiting_q(spec);
  const Mat3 c = spec.response_covariance();
  const double q = r.Q;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t t = 0; t < 3; ++t) {
      // cov(x_s - Q z, x_t - Q z) with <z> = 0, <z^2> = 1.
      const double cv = c[s][t] - q * spec.cross_z[s] - q * spec.cross_z[t] + q * q;
      r.Sigma[s][t] = s == t ? odds(spec.p[s]) * cv : -cv;
    }
  }
  return r;
}

double contrast_variance(const Mat3& m, Group s, Group t) {
  const auto i = index_of(s);
  const auto j = index_of(t);
  return m[i][i] + m[j][j] - 2.0 * m[i][j];
}

double contrast_variance(const Mat4& m, Group s, Group t) {
  const auto i = index_of(s);
  const auto j = index_of(t);
  return m[i][i] + m[j][j] - 2.0 * m[i][j];
}

NominalAsymptotics nominal_asymptotics(const AsymptoticSpec& spec) {
  spec.validate();
  const Mat3 c = spec.response_covariance();
  const double q = limiting_q(spec);
  double sigma_sq = spec.p[0] * c[0][0] + spec.p[1] * c[1][1] + spec.p[2] * c[2][2] - q * q;
  if (sigma_sq < -1e-9) {
    throw Error(ErrorCode::kInconsistentSpec,
                "inconsistent spec: limiting residual variance is negative");
  }
  sigma_sq = std::max(0.0, sigma_sq);

  NominalAsymptotics out;
  out.sigma_sq = sigma_sq;
  out.D = {spec.p[0], spec.p[1], spec.p[2], 1.0};
  out.sigma_sq_D_inverse = zero_matrix<4>();
  for (std::size_t k = 0; k < 4; ++k) out.sigma_sq_D_inverse[k][k] = sigma_sq / out.D[k];
  return out;
}

AdjustmentGain adjustment_gain(const AsymptoticSpec& spec, Group s, Group t) {
  if (s == t) throw Error(ErrorCode::kInvalidArgument, "contrast needs two distinct groups");
  spec.validate();
  const auto i = index_of(s);
  const auto j = index_of(t);
  const double q = limiting_q(spec);

  AdjustmentGain g;
  g.Gamma = 2.0 * q * (spec.p[j] * spec.cross_z[i] + spec.p[i] * spec.cross_z[j]) -
            q * q * (spec.p[i] + spec.p[j]);
  g.fraction_product = spec.p[i] * spec.p[j];
  if (g.Gamma > kNeutralGainTolerance) {
    g.verdict = GainVerdict::kHelps;
  } else if (g.Gamma < -kNeutralGainTolerance) {
    g.verdict = GainVerdict::kHurts;
  } else {
    g.verdict = GainVerdict::kNeutral;
  }
  return g;
}

double itt_asymptotic_contrast_variance(const AsymptoticSpec& spec, Group s, Group t) {
  if (s == t) throw Error(ErrorCode::kInvalidArgument, "contrast needs two distinct groups");
  const Mat3 c = spec.response_covariance();
  const auto i = index_of(s);
  const auto j = index_of(t);
  return odds(spec.p[i]) * c[i][i] + odds(spec.p[j]) * c[j][j] + 2.0 * c[i][j];
}

AsymptoticSpec plugin_spec(const Population& pop, const GroupSizes& sizes) {
  sizes.require_total(pop.size());
  const MomentSet m = moment_set(pop);
  Vec3 mean{};
  Mat3 cov{};
  for (std::size_t i = 0; i < 3; ++i) {
    mean[i] = m.mean[i];
    for (std::size_t j = 0; j < 3; ++j) cov[i][j] = m.cov[i][j];
  }
  AsymptoticSpec spec = AsymptoticSpec::from_covariances(sizes.fractions(), mean, cov, {});
  spec.cross_z = m.cross_z;
  return spec;
}

TheoryReport theory_report(const Population& pop, const GroupSizes& sizes, Group s, Group t) {
  sizes.require_total(pop.size());
  TheoryReport r;
  r.moments = moment_set(pop);
  r.Q_tilde = q_tilde(pop, sizes);
  r.K = bias_K(pop, sizes, true);
  r.K_uncentered = bias_K(pop, sizes, false);
  r.itt_pair_variances = {itt_pair_variance(pop, sizes, Group::A, Group::B),
                          itt_pair_variance(pop, sizes, Group::A, Group::C),
                          itt_pair_variance(pop, sizes, Group::B, Group::C)};

  const AsymptoticSpec spec = plugin_spec(pop, sizes);
  const SigmaResult sig = sigma_matrix(spec);
  r.Q = sig.Q;
  r.Sigma = sig.Sigma;
  const NominalAsymptotics nom = nominal_asymptotics(spec);
  r.sigma_sq = nom.sigma_sq;
  r.D = nom.D;
  r.nominal_asym = nom.sigma_sq_D_inverse;
  r.pair_s = s;
  r.pair_t = t;
  r.gain = adjustment_gain(spec, s, t);
  return r;
}

}  // namespace regadj
