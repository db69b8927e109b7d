#pragma once

// Fixed-size vectors and matrices for the 3- and 4-dimensional algebra of the
// three-arm regression. Everything here is small enough to live on the stack.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace regadj {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t R, std::size_t C = R>
using Mat = std::array<std::array<double, C>, R>;

using Vec3 = Vec<3>;
using Vec4 = Vec<4>;
using Mat3 = Mat<3>;
using Mat4 = Mat<4>;

template <std::size_t N>
constexpr Mat<N> zero_matrix() {
  Mat<N> m{};
  for (auto& row : m) row.fill(0.0);
  return m;
}

template <std::size_t N>
constexpr Mat<N> identity_matrix() {
  Mat<N> m = zero_matrix<N>();
  for (std::size_t i = 0; i < N; ++i) m[i][i] = 1.0;
  return m;
}

template <std::size_t R, std::size_t C>
double max_abs_diff(const Mat<R, C>& x, const Mat<R, C>& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) d = std::max(d, std::fabs(x[i][j] - y[i][j]));
  return d;
}

template <std::size_t N>
double max_abs_diff(const Vec<N>& x, const Vec<N>& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < N; ++i) d = std::max(d, std::fabs(x[i] - y[i]));
  return d;
}

template <std::size_t N>
double max_abs(const Vec<N>& x) {
  double d = 0.0;
  for (double v : x) d = std::max(d, std::fabs(v));
  return d;
}

template <std::size_t N>
bool is_symmetric(const Mat<N>& m, double tol) {
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if (std::fabs(m[i][j] - m[j][i]) > tol) return false;
  return true;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Only the upper triangle is read.
template <std::size_t N>
Vec<N> symmetric_eigenvalues(Mat<N> a) {
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < i; ++j) a[i][j] = a[j][i];

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < N; ++p)
      for (std::size_t q = p + 1; q < N; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300) break;

    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }

  Vec<N> ev{};
  for (std::size_t i = 0; i < N; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

template <std::size_t N>
bool is_positive_semidefinite(const Mat<N>& m, double tol) {
  return is_symmetric(m, tol) && symmetric_eigenvalues(m)[0] >= -tol;
}

}  // namespace regadj
