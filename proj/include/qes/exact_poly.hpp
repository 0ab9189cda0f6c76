#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace qes {

/// Univariate polynomial with exact rational coefficients, stored in
/// ascending order of powers. The zero polynomial has no coefficients and
/// degree -1; trailing zero coefficients are always trimmed.
class RationalPolynomial {
 public:
  RationalPolynomial() = default;
  explicit RationalPolynomial(std::vector<mpq_class> coeffs);
  RationalPolynomial(std::initializer_list<mpq_class> coeffs);

  static RationalPolynomial constant(const mpq_class& c);
  /// c * x^k
  static RationalPolynomial monomial(const mpq_class& c, int k);

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<mpq_class>& coeffs() const { return coeffs_; }
  /// Coefficient of x^k; zero beyond the degree.
  mpq_class coeff(int k) const;
  const mpq_class& leading() const { return coeffs_.back(); }

  mpq_class operator()(const mpq_class& x) const;
  /// Horner evaluation in long double; for exact signs use the rational overload.
  long double evaluate(long double x) const;
  /// Sum of |a_k| |x|^k, the natural scale for judging |p(x)| against cancellation.
  long double magnitude(long double x) const;

  RationalPolynomial derivative() const;

  RationalPolynomial& operator+=(const RationalPolynomial& rhs);
  RationalPolynomial& operator-=(const RationalPolynomial& rhs);
  RationalPolynomial& operator*=(const mpq_class& c);

  friend RationalPolynomial operator+(RationalPolynomial a, const RationalPolynomial& b) { return a += b; }
  friend RationalPolynomial operator-(RationalPolynomial a, const RationalPolynomial& b) { return a -= b; }
  friend RationalPolynomial operator*(RationalPolynomial a, const mpq_class& c) { return a *= c; }
  friend RationalPolynomial operator*(const mpq_class& c, RationalPolynomial a) { return a *= c; }
  friend RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b);
  friend bool operator==(const RationalPolynomial& a, const RationalPolynomial& b) { return a.coeffs_ == b.coeffs_; }

  /// Multiply by x^k.
  RationalPolynomial shifted(int k) const;

  /// Polynomial long division; returns (quotient, remainder). Throws on a zero divisor.
  std::pair<RationalPolynomial, RationalPolynomial> divmod(const RationalPolynomial& divisor) const;

 private:
  void trim();
  std::vector<mpq_class> coeffs_;
};

/// Sturm chain p, p', -rem(p, p'), ... used for exact real-root counting.
class SturmSequence {
 public:
  explicit SturmSequence(const RationalPolynomial& p);

  /// Sign changes along the chain at x (zeros skipped).
  int variations(const mpq_class& x) const;
  /// Number of distinct real roots in the half-open interval (a, b].
  int count_roots(const mpq_class& a, const mpq_class& b) const;
  /// Number of distinct real roots on the whole line.
  int count_real_roots() const;

  const std::vector<RationalPolynomial>& chain() const { return chain_; }

 private:
  int variations_at_infinity(bool positive) const;
  std::vector<RationalPolynomial> chain_;
};

/// Cauchy bound: every root satisfies |x| < bound.
mpq_class cauchy_root_bound(const RationalPolynomial& p);

struct RootInterval {
  mpq_class lo;  // exclusive
  mpq_class hi;  // inclusive
};

/// Isolate the distinct real roots of p in (a, b] into disjoint intervals
/// holding one root each, ordered by increasing lower endpoint.
std::vector<RootInterval> isolate_real_roots(const RationalPolynomial& p, const mpq_class& a, const mpq_class& b);

/// Sign of p(x) computed exactly.
int exact_sign(const RationalPolynomial& p, const mpq_class& x);

}  // namespace qes
