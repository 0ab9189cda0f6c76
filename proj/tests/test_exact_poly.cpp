#include <doctest.h>

#include <random>

#include "qes/exact_poly.hpp"

using qes::RationalPolynomial;
using qes::SturmSequence;

TEST_CASE("zero coefficients are trimmed") {
  RationalPolynomial p({1, 2, 0, 0});
  CHECK(p.degree() == 1);
  CHECK(RationalPolynomial({0, 0}).is_zero());
  CHECK(RationalPolynomial().degree() == -1);
}

TEST_CASE("evaluation and derivative") {
  // 3x^2 - 8
  RationalPolynomial p({-8, 0, 3});
  CHECK(p(mpq_class(2)) == 4);
  CHECK(p(mpq_class(1, 3)) == mpq_class(-23, 3));
  CHECK(p.derivative() == RationalPolynomial({0, 6}));
  CHECK(p.evaluate(2.0L) == doctest::Approx(4.0));
  CHECK(p.magnitude(-2.0L) == doctest::Approx(20.0));
}

TEST_CASE("divmod reconstructs the dividend") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coef(-9, 9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<mpq_class> a(7), b(4);
    for (auto& c : a) {
      c = mpq_class(coef(rng), 1 + std::abs(coef(rng)));
      c.canonicalize();
    }
    for (auto& c : b) {
      c = mpq_class(coef(rng), 1 + std::abs(coef(rng)));
      c.canonicalize();
    }
    b.back() = 5;
    RationalPolynomial pa(a), pb(b);
    auto [q, r] = pa.divmod(pb);
    CHECK(r.degree() < pb.degree());
    CHECK(q * pb + r == pa);
  }
  CHECK_THROWS(RationalPolynomial({1, 1}).divmod(RationalPolynomial()));
}

TEST_CASE("Sturm counts match known roots") {
  // (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
  RationalPolynomial p({6, -7, 0, 1});
  SturmSequence s(p);
  CHECK(s.count_real_roots() == 3);
  CHECK(s.count_roots(mpq_class(0), mpq_class(10)) == 2);
  CHECK(s.count_roots(mpq_class(-10), mpq_class(0)) == 1);
  CHECK(s.count_roots(mpq_class(1), mpq_class(2)) == 1);  // (1, 2] holds 2 only

  // x^2 + 1 has no real roots
  CHECK(SturmSequence(RationalPolynomial({1, 0, 1})).count_real_roots() == 0);
  // Double root counted once: (x-1)^2 (x+1)
  CHECK(SturmSequence(RationalPolynomial({1, -1, -1, 1})).count_real_roots() == 2);
}

TEST_CASE("isolation gives disjoint single-root intervals inside the Cauchy bound") {
  // roots 1/3, 1/2, 5, -4
  RationalPolynomial p = RationalPolynomial({mpq_class(-1, 3), 1}) * RationalPolynomial({mpq_class(-1, 2), 1}) *
                         RationalPolynomial({-5, 1}) * RationalPolynomial({4, 1});
  const mpq_class bound = qes::cauchy_root_bound(p);
  CHECK(bound > 5);
  auto ivs = qes::isolate_real_roots(p, -bound, bound);
  REQUIRE(ivs.size() == 4);
  const std::vector<mpq_class> roots{-4, mpq_class(1, 3), mpq_class(1, 2), 5};
  for (std::size_t k = 0; k < ivs.size(); ++k) {
    CHECK(ivs[k].lo < roots[k]);
    CHECK(roots[k] <= ivs[k].hi);
    if (k) CHECK(ivs[k - 1].hi <= ivs[k].lo);
  }
}
