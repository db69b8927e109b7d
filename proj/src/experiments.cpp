#include "regadj/experiments.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <ostream>

#include "parallel.hpp"
#include "regadj/error.hpp"
#include "regadj/estimators.hpp"
#include "regadj/format.hpp"
#include "regadj/summation.hpp"
#include "regadj/theory.hpp"

namespace regadj {

namespace {

constexpr std::uint64_t kExactChunk = 1024;
constexpr std::uint64_t kReplicateChunk = 256;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec3 population_means(const Population& pop) {
  return {compensated_mean(pop.a()), compensated_mean(pop.b()), compensated_mean(pop.c())};
}

// Two-pass mean and covariance of K-vectors picked out of `items` by `get`.
// Items failing `use` are skipped. `ddof` is 0 for exact (population) moments
// and 1 for Monte Carlo sample moments.
template <std::size_t K, class Items, class Get, class Use>
std::pair<Vec<K>, Mat<K>> mean_and_cov(const Items& items, Get get, Use use, int ddof,
                                       std::uint64_t& count) {
  std::array<CompensatedSum, K> sums;
  count = 0;
  for (const auto& item : items) {
    if (!use(item)) continue;
    const Vec<K> v = get(item);
    for (std::size_t k = 0; k < K; ++k) sums[k].add(v[k]);
    ++count;
  }
  Vec<K> mean{};
  Mat<K> cov = zero_matrix<K>();
  if (count == 0) return {mean, cov};
  for (std::size_t k = 0; k < K; ++k) mean[k] = sums[k].value() / static_cast<double>(count);

  std::array<std::array<CompensatedSum, K>, K> cross;
  for (const auto& item : items) {
    if (!use(item)) continue;
    const Vec<K> v = get(item);
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = j; k < K; ++k) cross[j][k].add((v[j] - mean[j]) * (v[k] - mean[k]));
  }
  const double denom = static_cast<double>(count) - ddof;
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t k = j; k < K; ++k) {
      cov[j][k] = denom > 0 ? cross[j][k].value() / denom : 0.0;
      cov[k][j] = cov[j][k];
    }
  }
  return {mean, cov};
}

template <std::size_t K>
Vec<K> standard_errors(const Mat<K>& cov, std::uint64_t count) {
  Vec<K> se{};
  for (std::size_t k = 0; k < K; ++k) se[k] = std::sqrt(cov[k][k] / static_cast<double>(count));
  return se;
}

Vec3 subtract(const Vec3& x, const Vec3& y) {
  return {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
}

// Index of entry (j, k), j <= k, in a row-major upper triangle of a 4x4.
constexpr std::size_t upper_index(std::size_t j, std::size_t k) {
  return j * 4 - j * (j - 1) / 2 + (k - j);
}

double sign_pattern(unsigned pattern, std::size_t i) {
  return (std::popcount(pattern & static_cast<unsigned>(i % 8)) % 2 == 0) ? 1.0 : -1.0;
}

std::vector<double> pattern_column(std::size_t n, unsigned pattern, double scale) {
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = scale * sign_pattern(pattern, i);
  return col;
}

void require_multiple_of_8(std::size_t n) {
  if (n == 0 || n % 8 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "constructed populations need n to be a positive multiple of 8, got " +
                    std::to_string(n));
  }
}

}  // namespace

ExactSummary exact_distribution(const Population& pop, const GroupSizes& sizes,
                                const ExactOptions& options) {
  sizes.require_total(pop.size());
  const AssignmentEnumerator enumerator(sizes, options.mode, options.limit);
  const std::uint64_t ranks = enumerator.total_ranks();
  const std::size_t n = pop.size();

  std::vector<ExactRecord> records(ranks);
  std::vector<char> emitted(ranks, 0);

  detail::parallel_chunks(ranks, kExactChunk, options.threads,
                          [&](std::uint64_t first, std::uint64_t last) {
    enumerator.for_each_in_range(first, last, [&](std::uint64_t rank,
                                                  std::span<const Group> labels) {
      const Assignment asg(std::vector<Group>(labels.begin(), labels.end()), sizes);
      const std::vector<double> y = observed_response(pop, asg);
      ExactRecord& rec = records[rank];
      rec.rank = rank;
      rec.itt = itt_estimates(y, asg).effects;
      try {
        const MREstimate mr = mr_estimates(pop.z(), y, asg);
        rec.mr = mr.effects;
        rec.q_hat = mr.q_hat;
        rec.sigma_hat_sq = mr.nominal ? mr.nominal->sigma_hat_sq : kNaN;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingularDesign) throw;
        rec.singular = true;
        rec.mr = {kNaN, kNaN, kNaN};
        rec.q_hat = kNaN;
        rec.sigma_hat_sq = kNaN;
      }
      emitted[rank] = 1;
    });
  });

  std::vector<ExactRecord> kept;
  kept.reserve(enumerator.count());
  for (std::uint64_t r = 0; r < ranks; ++r)
    if (emitted[r]) kept.push_back(records[r]);
  records.clear();
  records.shrink_to_fit();

  ExactSummary out;
  out.truth = population_means(pop);
  out.assignment_count = kept.size();

  std::uint64_t count = 0;
  const auto all = [](const ExactRecord&) { return true; };
  const auto regular = [](const ExactRecord& r) { return !r.singular; };

  auto [itt_mean, itt_cov] = mean_and_cov<3>(
      kept, [](const ExactRecord& r) { return r.itt; }, all, 0, count);
  out.itt = {itt_mean, subtract(itt_mean, out.truth), itt_cov};

  auto [mr_mean, mr_cov] = mean_and_cov<3>(
      kept, [](const ExactRecord& r) { return r.mr; }, regular, 0, count);
  out.singular_count = out.assignment_count - count;
  if (count == 0) {
    throw Error(ErrorCode::kAllAssignmentsSingular,
                "every enumerated assignment gives a singular design");
  }
  out.mr = {mr_mean, subtract(mr_mean, out.truth), mr_cov};

  CompensatedSum q, s2;
  for (const auto& r : kept) {
    if (r.singular) continue;
    q.add(r.q_hat);
    s2.add(r.sigma_hat_sq);
  }
  out.mean_q_hat = q.value() / static_cast<double>(count);
  out.mean_sigma_hat_sq = n > 4 ? s2.value() / static_cast<double>(count) : kNaN;

  if (options.keep_table) out.table = std::move(kept);
  return out;
}

MCSummary monte_carlo(const Population& pop, const GroupSizes& sizes,
                      const MonteCarloOptions& options) {
  if (options.reps < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Monte Carlo needs at least 2 replicates");
  }
  sizes.require_total(pop.size());
  const std::size_t n = pop.size();
  const auto nd = static_cast<double>(n);
  const double root_n = std::sqrt(nd);

  MCSummary out;
  out.reps = options.reps;
  out.seed = options.seed;
  out.n = n;
  out.truth = population_means(pop);
  out.Q_tilde = q_tilde(center_responses(pop).population, sizes);
  out.K = bias_K(pop, sizes, true);

  // (x_S z) for each subject and response, and its population mean.
  std::array<std::vector<double>, 3> xz;
  Vec3 xz_mean{};
  for (std::size_t r = 0; r < 3; ++r) {
    xz[r].resize(n);
    for (std::size_t i = 0; i < n; ++i) xz[r][i] = pop.response(r)[i] * pop.z()[i];
    xz_mean[r] = compensated_mean(xz[r]);
  }

  std::vector<ReplicateRecord> records(options.reps);
  detail::parallel_chunks(options.reps, kReplicateChunk, options.threads,
                          [&](std::uint64_t first, std::uint64_t last) {
    for (std::uint64_t rep = first; rep < last; ++rep) {
      CounterRng rng = CounterRng::stream(options.seed, rep);
      ReplicateRecord& rec = records[rep];
      while (true) {
        const Assignment asg = random_assignment(sizes, n, rng);
        const std::vector<double> y = observed_response(pop, asg);
        MREstimate mr;
        try {
          mr = mr_estimates(pop.z(), y, asg);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kSingularDesign) throw;
          if (++rec.redraws > options.max_redraws) {
            throw Error(ErrorCode::kAllAssignmentsSingular,
                        "too many consecutive singular draws");
          }
          continue;
        }
        rec.itt = itt_estimates(y, asg).effects;
        rec.mr = mr.effects;
        rec.q_hat = mr.q_hat;
        if (mr.nominal) {
          rec.sigma_hat_sq = mr.nominal->sigma_hat_sq;
          for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = j; k < 4; ++k)
              rec.nominal[upper_index(j, k)] = mr.nominal->cov[j][k];
        } else {
          rec.sigma_hat_sq = kNaN;
          rec.nominal.fill(kNaN);
        }
        for (std::size_t s = 0; s < 3; ++s) {
          rec.zeta[s] = root_n * (rec.itt[s] - out.truth[s] - out.Q_tilde * mr.z_means[s]);
          rec.rho[s] = -(mr.q_hat - out.Q_tilde) * mr.z_means[s] + out.K[s] / (nd - 1.0);
        }
        rec.concentration = 0.0;
        for (std::size_t s = 0; s < 3; ++s) {
          const double sampled = group_means(xz[s], asg)[s];
          rec.concentration = std::max(rec.concentration, std::fabs(sampled - xz_mean[s]));
        }
        break;
      }
    }
  });

  std::uint64_t count = 0;
  const auto all = [](const ReplicateRecord&) { return true; };

  auto summarize = [&](auto get) {
    auto [mean, cov] = mean_and_cov<3>(records, get, all, 1, count);
    MCEstimatorSummary s;
    s.mean = mean;
    s.bias = subtract(mean, out.truth);
    s.cov = cov;
    s.mean_se = standard_errors(cov, count);
    return s;
  };
  out.itt = summarize([](const ReplicateRecord& r) { return r.itt; });
  out.mr = summarize([](const ReplicateRecord& r) { return r.mr; });

  {
    auto [mean, cov] = mean_and_cov<2>(
        records, [](const ReplicateRecord& r) { return Vec<2>{r.q_hat, r.sigma_hat_sq}; },
        all, 1, count);
    const auto se = standard_errors(cov, count);
    out.mean_q_hat = mean[0];
    out.q_hat_se = se[0];
    out.mean_sigma_hat_sq = mean[1];
    out.sigma_hat_sq_se = se[1];
  }
  {
    auto [mean, cov] = mean_and_cov<10>(
        records, [](const ReplicateRecord& r) { return r.nominal; }, all, 1, count);
    const auto se = standard_errors(cov, count);
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t k = j; k < 4; ++k) {
        out.mean_nominal_cov[j][k] = out.mean_nominal_cov[k][j] = mean[upper_index(j, k)];
        out.nominal_cov_se[j][k] = out.nominal_cov_se[k][j] = se[upper_index(j, k)];
      }
    }
  }
  {
    auto [mean, cov] = mean_and_cov<3>(
        records, [](const ReplicateRecord& r) { return r.zeta; }, all, 1, count);
    out.zeta_mean = mean;
    out.zeta_cov = cov;
    for (std::size_t s = 0; s < 3; ++s) {
      CompensatedSum m2, m3, m4;
      for (const auto& r : records) {
        const double d = r.zeta[s] - mean[s];
        m2.add(d * d);
        m3.add(d * d * d);
        m4.add(d * d * d * d);
      }
      const double v = m2.value() / static_cast<double>(count);
      out.zeta_skewness[s] = v > 0 ? m3.value() / static_cast<double>(count) / std::pow(v, 1.5) : 0.0;
      out.zeta_kurtosis[s] = v > 0 ? m4.value() / static_cast<double>(count) / (v * v) : 0.0;
    }
  }
  {
    auto [mean, cov] = mean_and_cov<3>(
        records, [](const ReplicateRecord& r) { return r.rho; }, all, 1, count);
    out.rho_mean = mean;
    out.rho_se = standard_errors(cov, count);
  }

  CompensatedSum conc;
  for (const auto& r : records) {
    out.singular_redraws += r.redraws;
    conc.add(r.concentration);
    out.concentration_max = std::max(out.concentration_max, r.concentration);
  }
  out.concentration_mean = conc.value() / static_cast<double>(records.size());

  if (options.keep_records) out.records = std::move(records);
  return out;
}

OrderCheckResult order_checks(const Population& base, const GroupSizes& base_sizes,
                              const OrderCheckOptions& options) {
  base_sizes.require_total(base.size());
  for (std::size_t k = 0; k < options.m_values.size(); ++k) {
    if (options.m_values[k] == 0 || (k > 0 && options.m_values[k] <= options.m_values[k - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "replication factors must be increasing and positive");
    }
  }

  OrderCheckResult result;
  result.all_bias_within_4se = true;
  result.concentration_shrinks = true;

  for (std::size_t m : options.m_values) {
    const Population pop = replicate(base, m);
    const GroupSizes sizes = base_sizes.scaled(m);
    MonteCarloOptions mc_options;
    mc_options.reps = options.reps;
    mc_options.seed = options.seed;
    mc_options.threads = options.threads;
    const MCSummary mc = monte_carlo(pop, sizes, mc_options);

    OrderCheckRow row;
    row.m = m;
    row.n = pop.size();
    const double n1 = static_cast<double>(row.n) - 1.0;
    row.K = mc.K;
    row.bias_within_4se = true;
    for (std::size_t s = 0; s < 3; ++s) {
      row.bias_scaled[s] = n1 * mc.mr.bias[s];
      row.bias_scaled_se[s] = n1 * mc.mr.mean_se[s];
      const double gap = std::fabs(row.bias_scaled[s] + row.K[s]);
      if (gap > 4.0 * row.bias_scaled_se[s] + 1e-12) row.bias_within_4se = false;
    }

    const AsymptoticSpec spec = plugin_spec(pop, sizes);
    row.sigma_plugin = sigma_matrix(spec).Sigma;
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        row.sigma_mc[j][k] = static_cast<double>(row.n) * mc.mr.cov[j][k];
    row.sigma_sq = nominal_asymptotics(spec).sigma_sq;
    row.mean_sigma_hat_sq = mc.mean_sigma_hat_sq;
    row.sigma_hat_sq_se = mc.sigma_hat_sq_se;

    row.residual = mc.rho_mean;
    row.residual_se = mc.rho_se;
    row.residual_norm = std::sqrt(row.residual[0] * row.residual[0] +
                                  row.residual[1] * row.residual[1] +
                                  row.residual[2] * row.residual[2]);
    row.concentration_mean = mc.concentration_mean;

    if (!result.rows.empty() &&
        !(row.concentration_mean < result.rows.back().concentration_mean)) {
      result.concentration_shrinks = false;
    }
    result.all_bias_within_4se = result.all_bias_within_4se && row.bias_within_4se;
    result.rows.push_back(row);
  }

  // Least-squares slope of log residual against log n.
  CompensatedSum sx, sy;
  std::size_t points = 0;
  for (const auto& row : result.rows) {
    if (!(row.residual_norm > 0.0)) continue;
    sx.add(std::log(static_cast<double>(row.n)));
    sy.add(std::log(row.residual_norm));
    ++points;
  }
  if (points >= 2) {
    const double mx = sx.value() / static_cast<double>(points);
    const double my = sy.value() / static_cast<double>(points);
    CompensatedSum sxy, sxx;
    for (const auto& row : result.rows) {
      if (!(row.residual_norm > 0.0)) continue;
      const double dx = std::log(static_cast<double>(row.n)) - mx;
      sxy.add(dx * (std::log(row.residual_norm) - my));
      sxx.add(dx * dx);
    }
    result.residual_slope = sxy.value() / sxx.value();
  } else {
    result.residual_slope = kNaN;
  }
  return result;
}

void write_exact_table(std::ostream& out, const ExactSummary& summary,
                       const AssignmentEnumerator& enumerator) {
  out << "assignment,itt_A,itt_B,itt_C,mr_A,mr_B,mr_C,q_hat,sigma_hat_sq\n";
  for (const auto& r : summary.table) {
    const auto labels = enumerator.unrank(r.rank);
    for (Group g : labels) out << to_char(g);
    for (double v : r.itt) out << ',' << format_double(v);
    if (r.singular) {
      out << ",,,,,\n";
      continue;
    }
    for (double v : r.mr) out << ',' << format_double(v);
    out << ',' << format_double(r.q_hat) << ',' << format_double(r.sigma_hat_sq) << '\n';
  }
}

void write_replicate_table(std::ostream& out, const MCSummary& summary) {
  out << "replicate,itt_A,itt_B,itt_C,mr_A,mr_B,mr_C,q_hat,sigma_hat_sq\n";
  for (std::size_t i = 0; i < summary.records.size(); ++i) {
    const auto& r = summary.records[i];
    out << i;
    for (double v : r.itt) out << ',' << format_double(v);
    for (double v : r.mr) out << ',' << format_double(v);
    out << ',' << format_double(r.q_hat) << ',' << format_double(r.sigma_hat_sq) << '\n';
  }
}

Population make_example2_population(std::size_t n, double var_b) {
  require_multiple_of_8(n);
  if (!(var_b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "var_b must be positive");
  return Population(pattern_column(n, 1, 1.0), pattern_column(n, 2, std::sqrt(var_b)),
                    pattern_column(n, 4, 1.0), pattern_column(n, 7, 1.0));
}

Population make_additive_population(std::size_t n, double correlation) {
  require_multiple_of_8(n);
  if (!(std::fabs(correlation) <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "correlation must lie in [-1, 1]");
  }
  const auto z = pattern_column(n, 1, 1.0);
  const auto w = pattern_column(n, 2, 1.0);
  const double rest = std::sqrt(1.0 - correlation * correlation);
  std::vector<double> a(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = correlation * z[i] + rest * w[i];
    b[i] = a[i] + 1.0;
    c[i] = a[i] + 2.0;
  }
  return Population(std::move(a), std::move(b), std::move(c), z);
}

Population make_example4_population(std::size_t n, double var_b) {
  require_multiple_of_8(n);
  if (!(var_b > 0.0 && var_b < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "var_b must lie in (0, 1)");
  }
  const double side = std::sqrt((1.0 - var_b) / 2.0);
  auto a = pattern_column(n, 1, side);
  auto b = pattern_column(n, 2, std::sqrt(var_b));
  auto c = pattern_column(n, 4, side);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + b[i] + c[i];
  return Population(std::move(a), std::move(b), std::move(c), std::move(z));
}

}  // namespace regadj
