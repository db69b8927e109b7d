#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "regadj/assignment.hpp"
#include "regadj/error.hpp"
#include "regadj/population.hpp"
#include "regadj/rng.hpp"
#include "regadj/scenarios.hpp"
#include "test_support.hpp"

using namespace regadj;

namespace {

Population parse(const std::string& text) {
  std::istringstream in(text);
  return parse_population(in);
}

ParseError::Kind parse_error_kind(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::kParse);
    return e.kind();
  }
  FAIL("expected a parse error");
  return ParseError::Kind::kIo;
}

constexpr const char* kTable1Csv =
    "a,b,c,z\n"
    "0,1,2,0\n"
    "0,1,2,0\n"
    "0,1,2,0\n"
    "2,3,4,-2\n"
    "2,3,4,-2\n"
    "4,5,6,4\n";

}  // namespace

TEST_SUITE("population") {
  TEST_CASE("constructor rejects mismatched lengths, empty input and non-finite values") {
    CHECK_THROWS_AS(Population({1, 2}, {1, 2}, {1, 2}, {1}), Error);
    CHECK_THROWS_AS(Population({}, {}, {}, {}), Error);
    CHECK_THROWS_AS(Population({1, NAN}, {1, 2}, {1, 2}, {1, 2}), Error);
    CHECK_THROWS_AS(Population({1, 2}, {1, INFINITY}, {1, 2}, {1, 2}), Error);
  }

  TEST_CASE("parsing the six-row reference file") {
    const Population pop = parse(kTable1Csv);
    CHECK(pop.size() == 6);
    CHECK(pop == scenarios::table1_population());
    const std::vector<double> a(pop.a().begin(), pop.a().end());
    CHECK(a == std::vector<double>{0, 0, 0, 2, 2, 4});
  }

  TEST_CASE("column order is free and extra columns are ignored") {
    const Population pop = parse(
        "z,note,c,a,b\n"
        "0,x,2,0,1\n"
        "1,y,3,1,2\n");
    CHECK(pop.size() == 2);
    CHECK(pop.a()[1] == 1.0);
    CHECK(pop.b()[1] == 2.0);
    CHECK(pop.c()[0] == 2.0);
    CHECK(pop.z()[1] == 1.0);
  }

  TEST_CASE("whitespace, BOM, blank lines and CRLF are tolerated") {
    const Population pop = parse("\xEF\xBB\xBF a , b,c ,z\r\n 1, 2 ,+3,-4\r\n\r\n5,6,7,8e-1\r\n");
    CHECK(pop.size() == 2);
    CHECK(pop.c()[0] == 3.0);
    CHECK(pop.z()[0] == -4.0);
    CHECK(pop.z()[1] == 0.8);
  }

  TEST_CASE("parse errors are distinct and carry location") {
    CHECK(parse_error_kind("") == ParseError::Kind::kMissingHeader);
    CHECK(parse_error_kind("a,b,c,z\n") == ParseError::Kind::kEmptyBody);
    CHECK(parse_error_kind("a,b,z\n1,2,3\n") == ParseError::Kind::kMissingColumn);
    CHECK(parse_error_kind("a,b,c,z,a\n1,2,3,4,5\n") == ParseError::Kind::kDuplicateColumn);
    CHECK(parse_error_kind("a,b,c,z\n1,2,3\n") == ParseError::Kind::kFieldCount);
    CHECK(parse_error_kind("a,b,c,z\n1,2,x,4\n") == ParseError::Kind::kNonNumeric);
    CHECK(parse_error_kind("a,b,c,z\n1,2,1e999,4\n") == ParseError::Kind::kNonFinite);
    CHECK(parse_error_kind("a,b,c,z\n1,2,3,1.5.2\n") == ParseError::Kind::kNonNumeric);
    CHECK(parse_error_kind("a,b,c,z\n1,2,3,4,5\n") == ParseError::Kind::kFieldCount);

    try {
      parse("a,b,c,z\n1,2,3,4\n1,NaN,3,4\n");
      FAIL("NaN accepted");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::kNonFinite);
      CHECK(e.row() == 3);
      CHECK(e.column() == "b");
      CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
  }

  TEST_CASE("missing file is an io parse error") {
    try {
      load_population("/nonexistent/regadj/pop.csv");
      FAIL("missing file accepted");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::kIo);
    }
  }

  TEST_CASE("write then parse round-trips exactly") {
    CounterRng rng(99);
    const Population pop = testing::random_population(rng, 13, -1e3, 1e3);
    std::stringstream buf;
    write_population(buf, pop);
    CHECK(parse_population(buf) == pop);
  }

  TEST_CASE("reference moments") {
    const MomentSet m = moment_set(scenarios::table1_population());
    CHECK(m.n == 6);
    CHECK(m.mean_of(Var::a) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(m.mean_of(Var::b) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(m.mean_of(Var::c) == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
    CHECK(std::fabs(m.var(Var::a) - 20.0 / 9.0) < 1e-12);
    CHECK(std::fabs(m.covariance(Var::a, Var::z) - 4.0 / 3.0) < 1e-12);
    CHECK(std::fabs(m.var(Var::z) - 4.0) < 1e-12);
  }

  TEST_CASE("constant population has zero second moments") {
    const std::vector<double> five(7, 5.0);
    const MomentSet m = moment_set(Population(five, five, five, five));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(m.cov[i][j] == 0.0);
    for (double v : m.product_cov) CHECK(v == 0.0);
  }

  TEST_CASE("moments match naive sums and satisfy Cauchy-Schwarz") {
    CounterRng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + rng.bounded(20);
      const Population pop = testing::random_population(rng, n, -10, 10);
      const MomentSet m = moment_set(pop);
      for (Var x : kAllVars) {
        CHECK(m.var(x) >= 0.0);
        for (Var y : kAllVars) {
          double sxy = 0, sx = 0, sy = 0;
          for (std::size_t i = 0; i < n; ++i) {
            sxy += pop[x][i] * pop[y][i];
            sx += pop[x][i];
            sy += pop[y][i];
          }
          const double dn = static_cast<double>(n);
          const double naive = sxy / dn - (sx / dn) * (sy / dn);
          CHECK(std::fabs(m.covariance(x, y) - naive) < 1e-12 * std::max(1.0, std::fabs(naive)) * 100);
          CHECK(std::fabs(m.covariance(x, y)) <=
                std::sqrt(m.var(x) * m.var(y)) + 1e-12);
        }
      }
      for (std::size_t s = 0; s < 3; ++s) {
        double sxz = 0, sxzz = 0, sz = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double xz = pop.response(s)[i] * pop.z()[i];
          sxz += xz;
          sxzz += xz * pop.z()[i];
          sz += pop.z()[i];
        }
        const double dn = static_cast<double>(n);
        CHECK(std::fabs(m.cross_z[s] - sxz / dn) < 1e-10);
        CHECK(std::fabs(m.product_cov[s] - (sxzz / dn - (sxz / dn) * (sz / dn))) < 1e-9);
      }
    }
  }

  TEST_CASE("normalize_z on the reference population") {
    const NormalizedPopulation np = normalize_z(scenarios::table1_population());
    const std::vector<double> z(np.population.z().begin(), np.population.z().end());
    const std::vector<double> want{0, 0, 0, -1, -1, 2};
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::fabs(z[i] - want[i]) < 1e-12);
    CHECK(np.shift == 0.0);
    CHECK(std::fabs(np.scale - 2.0) < 1e-12);
    const Population& p = np.population;
    CHECK(std::equal(p.a().begin(), p.a().end(), scenarios::table1_population().a().begin()));
  }

  TEST_CASE("normalize_z is idempotent and yields mean 0, variance 1") {
    CounterRng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      const Population pop = testing::random_population(rng, 2 + rng.bounded(30), -10, 10);
      const Population once = normalize_z(pop).population;
      const MomentSet m = moment_set(once);
      CHECK(std::fabs(m.mean_of(Var::z)) < 1e-12);
      CHECK(std::fabs(m.var(Var::z) - 1.0) < 1e-12);
      const NormalizedPopulation twice = normalize_z(once);
      for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(std::fabs(twice.population.z()[i] - once.z()[i]) < 1e-12);
    }
  }

  TEST_CASE("normalize_z rejects a constant covariate") {
    const Population pop({1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {3, 3, 3});
    try {
      normalize_z(pop);
      FAIL("constant z accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kZeroVarianceCovariate);
      CHECK(std::string(e.what()).find("zero variance covariate") != std::string::npos);
    }
  }

  TEST_CASE("center_responses") {
    const CenteredPopulation cp = center_responses(scenarios::table1_population());
    CHECK(std::fabs(cp.removed_means[0] - 4.0 / 3.0) < 1e-12);
    CHECK(std::fabs(cp.removed_means[1] - 7.0 / 3.0) < 1e-12);
    CHECK(std::fabs(cp.removed_means[2] - 10.0 / 3.0) < 1e-12);
    const std::vector<double> want{-4.0 / 3, -4.0 / 3, -4.0 / 3, 2.0 / 3, 2.0 / 3, 8.0 / 3};
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(cp.population.response(s)[i] - want[i]) < 1e-12);
    CHECK(std::equal(cp.population.z().begin(), cp.population.z().end(),
                     scenarios::table1_population().z().begin()));

    const CenteredPopulation again = center_responses(cp.population);
    for (double m : again.removed_means) CHECK(std::fabs(m) < 1e-12);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(again.population.response(s)[i] - cp.population.response(s)[i]) < 1e-12);
  }

  TEST_CASE("replicate preserves moments") {
    const Population t1 = scenarios::table1_population();
    CHECK(replicate(t1, 1) == t1);
    const Population r10 = replicate(t1, 10);
    CHECK(r10.size() == 60);
    CHECK(std::fabs(moment_set(r10).var(Var::a) - 20.0 / 9.0) < 1e-12);
    CHECK(std::fabs(moment_set(replicate(t1, 3)).mean_of(Var::z)) < 1e-12);
    CHECK(r10.a()[9] == 0.0);
    CHECK(r10.a()[59] == 4.0);
    CHECK_THROWS_AS(replicate(t1, 0), Error);

    CounterRng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Population pop = testing::random_population(rng, 1 + rng.bounded(20), -10, 10);
      const std::size_t m = 1 + rng.bounded(100);
      const MomentSet base = moment_set(pop);
      const MomentSet rep = moment_set(replicate(pop, m));
      CHECK(rep.n == base.n * m);
      CHECK(max_abs_diff(rep.mean, base.mean) < 1e-12);
      CHECK(max_abs_diff(rep.cov, base.cov) < 1e-12 * 100);
      CHECK(max_abs_diff(rep.product_cov, base.product_cov) < 1e-10);
      CHECK(max_abs_diff(rep.cross_z, base.cross_z) < 1e-12 * 100);
    }
  }

  TEST_CASE("condition report") {
    const Population t1 = scenarios::table1_population();
    const GroupSizes sizes(1, 1, 4);
    const ConditionReport raw = condition_report(t1, sizes);
    CHECK(raw.fractions_ok);
    CHECK(raw.z_centered_ok);
    CHECK_FALSE(raw.z_scaled_ok);
    CHECK(std::fabs(raw.mean_sq_z - 4.0) < 1e-12);
    // max over variables of mean |x|^4: c = (2,2,2,4,4,6) gives (48 + 512 + 1296) / 6.
    CHECK(std::fabs(raw.fourth_moment_bound - (3 * 16.0 + 2 * 256.0 + 1296.0) / 6.0) < 1e-9);

    const ConditionReport norm = condition_report(normalize_z(t1).population, GroupSizes(2, 2, 2));
    CHECK(norm.z_centered_ok);
    CHECK(norm.z_scaled_ok);
    CHECK_FALSE(condition_report(t1, GroupSizes(2, 2, 3)).fractions_ok);
  }

  TEST_CASE("additivity predicate") {
    const Population t1 = scenarios::table1_population();
    CHECK(is_additive(t1));
    std::vector<double> b(t1.b().begin(), t1.b().end());
    b[3] += 0.5;
    const Population perturbed({t1.a().begin(), t1.a().end()}, b, {t1.c().begin(), t1.c().end()},
                               {t1.z().begin(), t1.z().end()});
    CHECK_FALSE(is_additive(perturbed));
    const std::vector<double> d = t1.deviations();
    CHECK(std::fabs(d[5] - 8.0 / 3.0) < 1e-12);
  }

  TEST_CASE("conditional constancy predicate") {
    CHECK(is_conditionally_constant(scenarios::conditional_constancy_population()));
    CHECK_FALSE(is_conditionally_constant(scenarios::table1_population()));
  }
}
