#include "qes/exact_poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qes {

RationalPolynomial::RationalPolynomial(std::vector<mpq_class> coeffs) : coeffs_(std::move(coeffs)) {
  for (auto& c : coeffs_) c.canonicalize();
  trim();
}

RationalPolynomial::RationalPolynomial(std::initializer_list<mpq_class> coeffs)
    : RationalPolynomial(std::vector<mpq_class>(coeffs)) {}

RationalPolynomial RationalPolynomial::constant(const mpq_class& c) { return RationalPolynomial({c}); }

RationalPolynomial RationalPolynomial::monomial(const mpq_class& c, int k) {
  std::vector<mpq_class> v(static_cast<std::size_t>(k) + 1, mpq_class(0));
  v.back() = c;
  return RationalPolynomial(std::move(v));
}

void RationalPolynomial::trim() {
  while (!coeffs_.empty() && sgn(coeffs_.back()) == 0) coeffs_.pop_back();
}

mpq_class RationalPolynomial::coeff(int k) const {
  if (k < 0 || k > degree()) return 0;
  return coeffs_[static_cast<std::size_t>(k)];
}

mpq_class RationalPolynomial::operator()(const mpq_class& x) const {
  mpq_class acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc *= x;
    acc += *it;
  }
  return acc;
}

long double RationalPolynomial::evaluate(long double x) const {
  long double acc = 0.0L;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = acc * x + static_cast<long double>(it->get_d());
  }
  return acc;
}

long double RationalPolynomial::magnitude(long double x) const {
  long double acc = 0.0L;
  const long double ax = std::fabs(x);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = acc * ax + std::fabs(static_cast<long double>(it->get_d()));
  }
  return acc;
}

RationalPolynomial RationalPolynomial::derivative() const {
  if (degree() < 1) return {};
  std::vector<mpq_class> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<long>(k);
  return RationalPolynomial(std::move(d));
}

RationalPolynomial& RationalPolynomial::operator+=(const RationalPolynomial& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), mpq_class(0));
  for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
  trim();
  return *this;
}

RationalPolynomial& RationalPolynomial::operator-=(const RationalPolynomial& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), mpq_class(0));
  for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
  trim();
  return *this;
}

RationalPolynomial& RationalPolynomial::operator*=(const mpq_class& c) {
  for (auto& a : coeffs_) a *= c;
  trim();
  return *this;
}

RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<mpq_class> out(a.coeffs_.size() + b.coeffs_.size() - 1, mpq_class(0));
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
  }
  return RationalPolynomial(std::move(out));
}

RationalPolynomial RationalPolynomial::shifted(int k) const {
  if (is_zero() || k == 0) return *this;
  std::vector<mpq_class> out(static_cast<std::size_t>(k), mpq_class(0));
  out.insert(out.end(), coeffs_.begin(), coeffs_.end());
  return RationalPolynomial(std::move(out));
}

std::pair<RationalPolynomial, RationalPolynomial> RationalPolynomial::divmod(const RationalPolynomial& divisor) const {
  if (divisor.is_zero()) throw std::domain_error("polynomial division by zero");
  RationalPolynomial rem = *this;
  if (rem.degree() < divisor.degree()) return {RationalPolynomial{}, rem};
  std::vector<mpq_class> quot(static_cast<std::size_t>(rem.degree() - divisor.degree()) + 1, mpq_class(0));
  const mpq_class& lead = divisor.leading();
  while (!rem.is_zero() && rem.degree() >= divisor.degree()) {
    const int shift = rem.degree() - divisor.degree();
    mpq_class factor = rem.leading() / lead;
    quot[static_cast<std::size_t>(shift)] = factor;
    // Cancel the leading term exactly, then drop it to avoid trimming on round-off.
    for (int k = 0; k <= divisor.degree(); ++k) {
      rem.coeffs_[static_cast<std::size_t>(k + shift)] -= factor * divisor.coeffs_[static_cast<std::size_t>(k)];
    }
    rem.trim();
  }
  return {RationalPolynomial(std::move(quot)), rem};
}

int exact_sign(const RationalPolynomial& p, const mpq_class& x) { return sgn(p(x)); }

SturmSequence::SturmSequence(const RationalPolynomial& p) {
  if (p.is_zero()) return;
  chain_.push_back(p);
  RationalPolynomial d = p.derivative();
  if (d.is_zero()) return;
  chain_.push_back(d);
  while (true) {
    const auto& a = chain_[chain_.size() - 2];
    const auto& b = chain_.back();
    RationalPolynomial r = a.divmod(b).second;
    if (r.is_zero()) break;
    // Negate and rescale by a positive constant to keep coefficients small.
    mpq_class scale = abs(r.leading());
    r *= mpq_class(-1) / scale;
    chain_.push_back(std::move(r));
  }
}

int SturmSequence::variations(const mpq_class& x) const {
  int changes = 0;
  int last = 0;
  for (const auto& q : chain_) {
    const int s = sgn(q(x));
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

int SturmSequence::variations_at_infinity(bool positive) const {
  int changes = 0;
  int last = 0;
  for (const auto& q : chain_) {
    int s = sgn(q.leading());
    if (!positive && (q.degree() % 2 == 1)) s = -s;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

int SturmSequence::count_roots(const mpq_class& a, const mpq_class& b) const {
  return variations(a) - variations(b);
}

int SturmSequence::count_real_roots() const {
  if (chain_.empty()) return 0;
  return variations_at_infinity(false) - variations_at_infinity(true);
}

mpq_class cauchy_root_bound(const RationalPolynomial& p) {
  mpq_class m = 0;
  if (p.degree() < 1) return 1;
  const mpq_class& lead = p.leading();
  for (int k = 0; k < p.degree(); ++k) {
    mpq_class ratio = abs(p.coeff(k) / lead);
    if (ratio > m) m = ratio;
  }
  return m + 1;
}

std::vector<RootInterval> isolate_real_roots(const RationalPolynomial& p, const mpq_class& a, const mpq_class& b) {
  std::vector<RootInterval> out;
  if (p.degree() < 1) return out;
  const SturmSequence sturm(p);
  std::vector<RootInterval> pending{{a, b}};
  while (!pending.empty()) {
    RootInterval iv = pending.back();
    pending.pop_back();
    const int count = sturm.count_roots(iv.lo, iv.hi);
    if (count == 0) continue;
    if (count == 1) {
      out.push_back(iv);
      continue;
    }
    mpq_class mid = (iv.lo + iv.hi) / 2;
    pending.push_back({mid, iv.hi});
    pending.push_back({iv.lo, mid});
  }
  std::sort(out.begin(), out.end(), [](const RootInterval& x, const RootInterval& y) { return x.lo < y.lo; });
  return out;
}

}  // namespace qes
