#include "qes/frobenius.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "qes/errors.hpp"

namespace qes {

namespace {

constexpr double kRootResidualTolerance = 1e-12;

// x-interval relative width at which exact bisection stops; well below double resolution.
const mpq_class& bisection_resolution() {
  static const mpq_class eps = [] {
    mpq_class e(1);
    mpz_class two_pow = 1;
    two_pow <<= 64;
    e /= two_pow;
    return e;
  }();
  return eps;
}

// Shrink an isolating interval (lo, hi] of a single root of q by exact bisection.
mpq_class refine_root(const RationalPolynomial& q, const SturmSequence& sturm, mpq_class lo, mpq_class hi) {
  int sign_lo = exact_sign(q, lo);
  const int sign_hi = exact_sign(q, hi);
  if (sign_hi == 0) return hi;
  const bool sign_change = sign_lo != 0 && sign_lo != sign_hi;
  while (hi - lo > hi * bisection_resolution()) {
    mpq_class mid = (lo + hi) / 2;
    if (sign_change) {
      const int sm = exact_sign(q, mid);
      if (sm == 0) return mid;
      if (sm == sign_lo) {
        lo = mid;
      } else {
        hi = mid;
      }
    } else if (sturm.count_roots(lo, mid) == 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return (lo + hi) / 2;
}

struct PolishedRoot {
  double nu;
  mpq_class exact;  // ~160 bits when the root is simple, otherwise equal to nu
};

// Closest double to a simple root of q(nu^2) near nu0, found by bisecting
// between doubles with exact sign evaluation, then continued in rationals.
PolishedRoot polish_in_nu(const RationalPolynomial& q, double nu0) {
  const auto sign_q = [&](const mpq_class& v) { return exact_sign(q, v * v); };
  const auto sign_at = [&](double v) { return sign_q(mpq_class(v)); };
  if (sign_at(nu0) == 0) return {nu0, mpq_class(nu0)};
  double lo = nu0, hi = nu0;
  const int s0 = sign_at(nu0);
  for (int step = 0; step < 64; ++step) {
    const double down = std::nextafter(lo, 0.0);
    const double up = std::nextafter(hi, HUGE_VAL);
    if (sign_at(down) != s0) {
      hi = lo;
      lo = down;
      break;
    }
    if (sign_at(up) != s0) {
      lo = hi;
      hi = up;
      break;
    }
    lo = down;
    hi = up;
  }
  const int s_lo = sign_at(lo);
  if (s_lo == sign_at(hi)) return {nu0, mpq_class(nu0)};  // even multiplicity: no sign change to bracket
  while (true) {
    const double mid = lo + (hi - lo) / 2;
    if (mid == lo || mid == hi) break;
    const int sm = sign_at(mid);
    if (sm == 0) return {mid, mpq_class(mid)};
    (sm == s_lo ? lo : hi) = mid;
  }
  mpq_class a(lo), b(hi);
  const mpq_class qa = abs(q(a * a)), qb = abs(q(b * b));
  const double best = qa <= qb ? lo : hi;
  for (int step = 0; step < 108; ++step) {
    mpq_class mid = (a + b) / 2;
    const int sm = sign_q(mid);
    if (sm == 0) return {best, mid};
    (sm == s_lo ? a : b) = std::move(mid);
  }
  return {best, (a + b) / 2};
}

double relative_poly_residual(const RationalPolynomial& p, double nu) {
  const mpq_class x(nu);
  const double value = std::fabs(p(x).get_d());
  const double scale = static_cast<double>(p.magnitude(nu));
  return scale > 0.0 ? value / scale : value;
}

}  // namespace

double truncation_energy(int n, int s, double nu) { return 2.0 * (n + s + 1) - nu * nu / 4.0; }

mpq_class truncated_B(int j, int n, int s) {
  mpq_class b(2L * (j - n), static_cast<long>(j + 2) * (j + 2L * (s + 1)));
  b.canonicalize();
  return b;
}

TruncationPolynomial cnp1_polynomial(int n, int l) {
  if (n < 0) throw InvalidArgument("truncation order must be non-negative");
  const int s = std::abs(l);
  // With W eliminated, A_j contributes a factor of nu and B_{j,n} is a constant.
  RationalPolynomial prev;                                    // c_{-1}
  RationalPolynomial cur = RationalPolynomial::constant(1);  // c_0
  for (int j = -1; j < n; ++j) {
    mpq_class a(2L * j + 2L * s + 3, detail::recurrence_denominator(j, s));
    a.canonicalize();
    RationalPolynomial next = (cur * a).shifted(1);
    next += prev * truncated_B(j, n, s);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {n, l, std::move(cur)};
}

TruncationRoots truncation_roots(int n, int l) {
  const TruncationPolynomial tp = cnp1_polynomial(n, l);
  const RationalPolynomial& p = tp.poly;
  const int parity = tp.parity();

  // c_{n+1}(nu) = nu^parity * Q(nu^2)
  std::vector<mpq_class> qc;
  for (int k = parity; k <= p.degree(); k += 2) qc.push_back(p.coeff(k));
  RationalPolynomial q(std::move(qc));

  std::vector<std::pair<double, mpq_class>> found;
  bool zero_root = parity == 1;
  if (sgn(q.coeff(0)) == 0) zero_root = true;

  if (q.degree() >= 1) {
    const SturmSequence sturm(q);
    const mpq_class bound = cauchy_root_bound(q);
    for (const RootInterval& iv : isolate_real_roots(q, mpq_class(0), bound)) {
      const mpq_class x = refine_root(q, sturm, iv.lo, iv.hi);
      const PolishedRoot root = polish_in_nu(q, std::sqrt(x.get_d()));
      const double nu = root.nu;
      if (relative_poly_residual(p, nu) > kRootResidualTolerance) {
        std::ostringstream msg;
        msg << "root of c_" << n + 1 << " near nu=" << nu << " (l=" << l << ") did not refine to tolerance";
        throw RootRefinementFailure(msg.str());
      }
      found.emplace_back(nu, root.exact);
      found.emplace_back(-nu, -root.exact);
    }
  }
  if (zero_root) found.emplace_back(0.0, mpq_class(0));

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  TruncationRoots out{n, l, {}, p.degree(), {}};
  for (auto& [v, exact] : found) {
    if (!out.nu.empty() && std::fabs(out.nu.back() - v) < 1e-9 * (1.0 + std::fabs(v))) continue;
    out.nu.push_back(v);
    out.nu_exact.push_back(std::move(exact));
  }
  return out;
}

TruncationSolution polynomial_solution(int n, int i, int l) { return polynomial_solution(truncation_roots(n, l), i); }

TruncationSolution polynomial_solution(const TruncationRoots& roots, int i) {
  if (i < 1 || i > roots.found_count()) {
    std::ostringstream msg;
    msg << "root index " << i << " out of range for n=" << roots.n << ", l=" << roots.l << " ("
        << roots.found_count() << " real roots)";
    throw IndexOutOfRange(msg.str());
  }
  TruncationSolution sol;
  sol.n = roots.n;
  sol.i = i;
  sol.l = roots.l;
  sol.nu = roots.nu[static_cast<std::size_t>(i - 1)] + 0.0;  // no negative zero
  sol.W = truncation_energy(sol.n, sol.s(), sol.nu);

  const std::size_t k = static_cast<std::size_t>(i - 1);
  sol.nu_exact = k < roots.nu_exact.size() ? roots.nu_exact[k] : mpq_class(sol.nu);
  const mpq_class& nu = sol.nu_exact;
  const mpq_class W = mpq_class(2L * (sol.n + sol.s() + 1)) - nu * nu / 4;
  const std::vector<mpq_class> c = series_coeffs<mpq_class>(sol.n, sol.s(), nu, W);
  sol.coeffs.reserve(c.size());
  for (const auto& cj : c) sol.coeffs.push_back(cj.get_d());
  sol.exact_coeffs = c;

  sol.closure_defect = closure_defect(sol);
  if (!(sol.closure_defect <= kClosureTolerance)) {
    std::ostringstream msg;
    msg << "truncation closure failed for n=" << sol.n << ", i=" << i << ", l=" << sol.l << ": defect "
        << sol.closure_defect;
    throw RootRefinementFailure(msg.str());
  }
  return sol;
}

double closure_defect(const TruncationSolution& sol) {
  const mpq_class nu = sol.exact_coeffs.empty() ? mpq_class(sol.nu) : sol.nu_exact;
  const mpq_class W = sol.exact_coeffs.empty() ? mpq_class(sol.W) : mpq_class(2L * (sol.n + sol.s() + 1)) - nu * nu / 4;
  const std::vector<mpq_class> c = series_coeffs<mpq_class>(sol.n + 2, sol.s(), nu, W);
  mpq_class largest = 0;
  for (int j = 0; j <= sol.n; ++j) largest = std::max(largest, mpq_class(abs(c[static_cast<std::size_t>(j)])));
  const mpq_class tail = std::max(mpq_class(abs(c[static_cast<std::size_t>(sol.n + 1)])),
                                  mpq_class(abs(c[static_cast<std::size_t>(sol.n + 2)])));
  return mpq_class(tail / largest).get_d();
}

namespace {

struct PolyDerivs {
  double p = 0.0, dp = 0.0, d2p = 0.0;
};

PolyDerivs horner(const TruncationSolution& sol, double r) {
  PolyDerivs out;
  if (sol.exact_coeffs.empty()) {
    for (auto it = sol.coeffs.rbegin(); it != sol.coeffs.rend(); ++it) {
      out.d2p = out.d2p * r + 2.0 * out.dp;
      out.dp = out.dp * r + out.p;
      out.p = out.p * r + *it;
    }
    return out;
  }
  const mpq_class x(r);
  mpq_class p = 0, dp = 0, d2p = 0;
  for (auto it = sol.exact_coeffs.rbegin(); it != sol.exact_coeffs.rend(); ++it) {
    d2p = d2p * x + 2 * dp;
    dp = dp * x + p;
    p = p * x + *it;
  }
  return {p.get_d(), dp.get_d(), d2p.get_d()};
}

double envelope(const TruncationSolution& sol, double r) {
  return std::pow(r, sol.s()) * std::exp(-0.5 * r * r - 0.5 * sol.nu * r);
}

}  // namespace

double evaluate_F(const TruncationSolution& sol, double r) { return envelope(sol, r) * horner(sol, r).p; }

double OdeTerms::scale() const {
  return std::max({std::fabs(second), std::fabs(first), std::fabs(centrifugal), std::fabs(quadratic),
                   std::fabs(linear), std::fabs(energy)});
}

OdeTerms ode_terms(const TruncationSolution& sol, double r) {
  // F = E(r) P(r) with E = r^s exp(g), g = -r^2/2 - nu r/2.
  // Work with G = F / E so that no power of r is differentiated numerically.
  const double s = sol.s();
  const PolyDerivs pd = horner(sol, r);
  const double E = envelope(sol, r);
  const double dg = -r - 0.5 * sol.nu;
  const double d2g = -1.0;
  // Derivatives of r^s P divided by r^s.
  const double h0 = pd.p;
  const double h1 = s * pd.p / r + pd.dp;
  const double h2 = s * (s - 1.0) * pd.p / (r * r) + 2.0 * s * pd.dp / r + pd.d2p;

  const double F = E * h0;
  const double dF = E * (dg * h0 + h1);
  const double d2F = E * ((d2g + dg * dg) * h0 + 2.0 * dg * h1 + h2);
  const double l2 = static_cast<double>(sol.l) * sol.l;
  return {d2F, dF / r, -l2 * F / (r * r), -r * r * F, -sol.nu * r * F, sol.W * F};
}

double ode_residual(const TruncationSolution& sol, double r) { return ode_terms(sol, r).sum(); }

double relative_ode_residual(const TruncationSolution& sol, double r) {
  const OdeTerms t = ode_terms(sol, r);
  const double scale = t.scale();
  return scale > 0.0 ? std::fabs(t.sum()) / scale : 0.0;
}

}  // namespace qes
