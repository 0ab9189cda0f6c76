#pragma once

// Power-series (Frobenius) route to the radial eigenproblem
//
//   F'' + F'/r - l^2 F / r^2 - r^2 F - nu r F + W F = 0,
//
// using the ansatz F(r) = r^s exp(-r^2/2 - nu r/2) sum_j c_j r^j with s = |l|.
// Forcing the series to terminate at order n pins W to the inverted parabola
// W = 2(n+s+1) - nu^2/4 and nu to the real roots of c_{n+1}(nu).

#include <cstdlib>
#include <vector>

#include "qes/exact_poly.hpp"

namespace qes {

/// Dimensionless problem instance (l, nu). Everything spectral depends on l only via s = |l|.
struct ReducedProblem {
  int l = 0;
  double nu = 0.0;

  int s() const { return std::abs(l); }
};

/// Coefficients of c_{j+2} = A c_{j+1} + B c_j.
template <class T>
struct RecurrencePair {
  T A;
  T B;
};

namespace detail {
// 2(j+2)(j+2(s+1)); positive for j >= -1, s >= 0.
inline long recurrence_denominator(int j, int s) { return 2L * (j + 2) * (j + 2L * (s + 1)); }
}  // namespace detail

/// Three-term recurrence coefficients for general (nu, W). Valid for j >= -1, s >= 0.
/// T is double, long double or mpq_class.
template <class T>
RecurrencePair<T> recurrence_coeffs(int j, int s, const T& nu, const T& W) {
  const long den = detail::recurrence_denominator(j, s);
  T A = nu * T(2L * j + 2L * s + 3) / T(den);
  T B = -(T(4) * W - T(8L * j) + nu * nu - T(8L * (s + 1))) / T(2L * den);
  return {A, B};
}

/// c_0 .. c_{n_terms} with c_{-1} = 0, c_0 = 1.
template <class T>
std::vector<T> series_coeffs(int n_terms, int s, const T& nu, const T& W) {
  std::vector<T> c;
  c.reserve(static_cast<std::size_t>(n_terms) + 1);
  c.push_back(T(1));
  T prev(0);  // c_{j}, starting at c_{-1}
  for (int j = -1; j + 2 <= n_terms; ++j) {
    const auto [A, B] = recurrence_coeffs<T>(j, s, nu, W);
    T next = A * c.back() + B * prev;
    prev = c.back();
    c.push_back(next);
  }
  return c;
}

/// W_l^(n) = 2(n+s+1) - nu^2/4, the energy forced by B_n = 0.
double truncation_energy(int n, int s, double nu);

/// B_{j,n} = 2(j-n) / ((j+2)(j+2(s+1))): the B coefficient once W is fixed by truncation at order n.
mpq_class truncated_B(int j, int n, int s);

/// c_{n+1}(nu) as an exact polynomial, normalised to c_0 = 1.
struct TruncationPolynomial {
  int n = 0;
  int l = 0;
  RationalPolynomial poly;

  int s() const { return std::abs(l); }
  /// (n+1) mod 2: c_{n+1} is odd in nu when this is 1.
  int parity() const { return (n + 1) % 2; }
};

TruncationPolynomial cnp1_polynomial(int n, int l);

/// Real roots of c_{n+1}(nu), strictly decreasing.
struct TruncationRoots {
  int n = 0;
  int l = 0;
  std::vector<double> nu;
  /// Degree of c_{n+1}; every root is expected to be real.
  int expected_count = 0;
  /// The same roots to about 160 bits (exact 0 for the zero root).
  std::vector<mpq_class> nu_exact;

  int found_count() const { return static_cast<int>(nu.size()); }
  bool complete() const { return found_count() == expected_count; }
};

/// Roots are isolated exactly on the parity-reduced polynomial in nu^2 and
/// bisected with exact sign evaluation down to adjacent doubles.
TruncationRoots truncation_roots(int n, int l);

/// One polynomial eigenfunction of the radial problem.
struct TruncationSolution {
  int n = 0;
  int i = 1;  // 1-based, decreasing-nu order
  int l = 0;
  double nu = 0.0;
  double W = 0.0;
  std::vector<double> coeffs;  // c_0 .. c_n, c_0 = 1
  /// High-precision root and the exact coefficients it generates. When present
  /// they are used for evaluation: for strongly negative roots the polynomial
  /// cancels against the exp(-nu r/2) envelope, and a root rounded to double
  /// leaves a residual far above double precision.
  mpq_class nu_exact;
  std::vector<mpq_class> exact_coeffs;
  /// max(|c_{n+1}|, |c_{n+2}|) / max_j |c_j| at the stored root (nu_exact when set).
  double closure_defect = 0.0;

  int s() const { return std::abs(l); }
};

inline constexpr double kClosureTolerance = 1e-10;

TruncationSolution polynomial_solution(int n, int i, int l);
TruncationSolution polynomial_solution(const TruncationRoots& roots, int i);

/// Recurrence-extended c_{n+1}, c_{n+2} relative to the largest retained coefficient,
/// evaluated exactly at the stored nu and W.
double closure_defect(const TruncationSolution& sol);

/// r^s exp(-r^2/2 - nu r/2) sum_{j<=n} c_j r^j
double evaluate_F(const TruncationSolution& sol, double r);

/// The terms of the radial equation at r, computed from closed-form derivatives.
struct OdeTerms {
  double second;      // F''
  double first;       // F'/r
  double centrifugal; // -l^2 F / r^2
  double quadratic;   // -r^2 F
  double linear;      // -nu r F
  double energy;      // W F

  double sum() const { return second + first + centrifugal + quadratic + linear + energy; }
  double scale() const;
};

OdeTerms ode_terms(const TruncationSolution& sol, double r);

/// Left-hand side of the radial equation at r for the closed-form solution.
double ode_residual(const TruncationSolution& sol, double r);
/// Residual divided by the largest individual term at r.
double relative_ode_residual(const TruncationSolution& sol, double r);

}  // namespace qes
