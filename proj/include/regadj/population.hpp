#pragma once

// Finite populations of potential responses under the Neyman model.
//
// Every subject i carries three potential responses a_i, b_i, c_i (to
// treatments A, B, C) and a covariate z_i. Moments throughout use divisor n.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "regadj/linalg.hpp"

namespace regadj {

class GroupSizes;

/// The four population variables, in storage order.
enum class Var { a = 0, b = 1, c = 2, z = 3 };

constexpr std::array<Var, 4> kAllVars{Var::a, Var::b, Var::c, Var::z};

std::string_view to_string(Var v) noexcept;

class Population {
 public:
  /// Validates equal lengths, n >= 1 and finiteness.
  Population(std::vector<double> a, std::vector<double> b, std::vector<double> c,
             std::vector<double> z);

  std::size_t size() const noexcept { return z_.size(); }

  std::span<const double> a() const noexcept { return a_; }
  std::span<const double> b() const noexcept { return b_; }
  std::span<const double> c() const noexcept { return c_; }
  std::span<const double> z() const noexcept { return z_; }
  std::span<const double> operator[](Var v) const noexcept;

  /// Response column for treatment index 0, 1, 2 (A, B, C).
  std::span<const double> response(std::size_t treatment) const noexcept {
    return (*this)[static_cast<Var>(treatment)];
  }

  /// a - mean(a): the common deviation sequence when effects are additive.
  std::vector<double> deviations() const;

  Population with_z(std::vector<double> z) const;

  friend bool operator==(const Population&, const Population&) = default;

 private:
  std::vector<double> a_, b_, c_, z_;
};

struct MomentSet {
  std::size_t n = 0;
  Vec4 mean{};
  /// Covariance matrix of (a, b, c, z); the diagonal holds the variances.
  Mat4 cov{};
  /// cov(az, z), cov(bz, z), cov(cz, z): products formed elementwise first.
  Vec3 product_cov{};
  /// (1/n) sum x_i z_i for x = a, b, c (raw, not centered).
  Vec3 cross_z{};
  /// (1/n) sum |x_i|^4 per variable.
  Vec4 fourth_abs{};

  double mean_of(Var v) const { return mean[static_cast<std::size_t>(v)]; }
  double var(Var v) const {
    const auto i = static_cast<std::size_t>(v);
    return cov[i][i];
  }
  double covariance(Var x, Var y) const {
    return cov[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
  }
};

struct ConditionReport {
  double mean_z = 0.0;
  double mean_sq_z = 0.0;
  /// max over a, b, c, z of (1/n) sum |x_i|^4.
  double fourth_moment_bound = 0.0;
  bool fractions_ok = false;
  bool z_centered_ok = false;
  bool z_scaled_ok = false;
};

struct NormalizedPopulation {
  Population population;
  /// z_new = (z_old - shift) / scale.
  double shift = 0.0;
  double scale = 1.0;
};

struct CenteredPopulation {
  Population population;
  Vec3 removed_means{};
};

inline constexpr double kNormalizationTolerance = 1e-9;

Population parse_population(std::istream& in);
Population load_population(const std::filesystem::path& path);
void write_population(std::ostream& out, const Population& pop);

MomentSet moment_set(const Population& pop);

/// Subtracts mean(z) and divides by the root mean square of the centered z.
NormalizedPopulation normalize_z(const Population& pop);

CenteredPopulation center_responses(const Population& pop);

/// Each subject repeated m times in place (subject order i, i, ..., i+1, ...).
Population replicate(const Population& pop, std::size_t m);

ConditionReport condition_report(const Population& pop, const GroupSizes& sizes);

/// b - a and c - a constant across subjects, up to `tol`.
bool is_additive(const Population& pop, double tol = 1e-12);

/// Within every level of z, the mean of each response equals its population
/// mean (up to `tol`). Levels are exact matches of z values.
bool is_conditionally_constant(const Population& pop, double tol = 1e-12);

}  // namespace regadj
