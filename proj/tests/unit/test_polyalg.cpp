#include <array>
#include <random>
#include <vector>

#include "fixtures.hpp"

namespace ssmr {
namespace {

MultiPoly s1(unsigned order = 5) { return MultiPoly::variable(2, order, 0); }
MultiPoly s2(unsigned order = 5) { return MultiPoly::variable(2, order, 1); }

MultiPoly from_terms(std::initializer_list<std::pair<MultiIndex, Complex>> terms, unsigned order = 5) {
  MultiPoly p(2, order);
  for (const auto& [m, c] : terms) p.add_term(m, c);
  return p;
}

MultiPoly random_poly(std::mt19937_64& rng, unsigned order, unsigned max_deg) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MultiPoly p(2, order);
  for (unsigned d = 0; d <= max_deg; ++d)
    for (unsigned j = 0; j <= d; ++j) p.add_term(MultiIndex{d - j, j}, Complex(u(rng), u(rng)));
  return p;
}

void expect_close(const MultiPoly& p, const MultiPoly& q, double tol) {
  double scale = 0.0;
  for (const auto& [m, c] : p.terms()) scale = std::max(scale, std::abs(c));
  for (const auto& [m, c] : q.terms()) scale = std::max(scale, std::abs(c));
  for (const auto& [m, c] : p.terms()) EXPECT_LE(std::abs(c - q.coeff(m)), tol * scale) << format_index(m);
  for (const auto& [m, c] : q.terms()) EXPECT_LE(std::abs(c - p.coeff(m)), tol * scale) << format_index(m);
}

TEST(PolyAdd, MonomialUnion) {
  const auto r = poly_add(s1(), s2());
  EXPECT_EQ(r, from_terms({{{1, 0}, 1.0}, {{0, 1}, 1.0}}));
}

TEST(PolyAdd, AdditiveInverseIsZero) {
  const auto p = from_terms({{{2, 0}, Complex(1, 2)}, {{1, 1}, -3.0}});
  EXPECT_TRUE(poly_add(p, poly_scale(p, -1.0)).is_zero());
}

TEST(PolyAdd, MergesLikeTerms) {
  const auto p = from_terms({{{2, 0}, 1.0}, {{1, 1}, 1.0}});
  const auto q = from_terms({{{1, 1}, 1.0}});
  EXPECT_EQ(poly_add(p, q), from_terms({{{2, 0}, 1.0}, {{1, 1}, 2.0}}));
}

TEST(PolyAdd, RejectsMismatchedShapes) {
  EXPECT_THROW(poly_add(MultiPoly(2, 3), MultiPoly(3, 3)), Error);
  EXPECT_THROW(poly_add(MultiPoly(2, 3), MultiPoly(2, 4)), Error);
}

TEST(PolyMul, Monomials) { EXPECT_EQ(poly_mul(s1(), s2()), from_terms({{{1, 1}, 1.0}})); }

TEST(PolyMul, Binomial) {
  const auto p = poly_add(s1(), s2());
  EXPECT_EQ(poly_mul(p, p), from_terms({{{2, 0}, 1.0}, {{1, 1}, 2.0}, {{0, 2}, 1.0}}));
}

TEST(PolyMul, TruncatesAboveCap) {
  const auto p = from_terms({{{2, 0}, 1.0}}, 3);
  EXPECT_TRUE(poly_mul(p, p).is_zero());
}

TEST(PolyMul, DistributesOverAdd) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_poly(rng, 6, 4), q = random_poly(rng, 6, 4), r = random_poly(rng, 6, 4);
    expect_close(poly_mul(p, poly_add(q, r)), poly_add(poly_mul(p, q), poly_mul(p, r)), 1e-12);
  }
}

TEST(PolyMul, EvaluationHomomorphism) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_poly(rng, 6, 3), q = random_poly(rng, 6, 3);
    const std::array<Complex, 2> x{Complex(u(rng), u(rng)), Complex(u(rng), u(rng))};
    const Complex lhs = poly_mul(p, q).evaluate(x);
    const Complex rhs = p.evaluate(x) * q.evaluate(x);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(PolySubstitute, CubeExpansion) {
  // x3^3 over four variables with w3 = s1 + s2.
  std::vector<MultiPoly> w(4, MultiPoly(2, 5));
  w[2] = poly_add(s1(), s2());
  const auto r = poly_substitute(MultiIndex{0, 0, 3, 0}, 1.0, w);
  EXPECT_EQ(r, from_terms({{{3, 0}, 1.0}, {{2, 1}, 3.0}, {{1, 2}, 3.0}, {{0, 3}, 1.0}}));
}

TEST(PolySubstitute, ZeroFactorAnnihilates) {
  std::vector<MultiPoly> w(2, MultiPoly(2, 5));
  w[0] = s1();
  EXPECT_TRUE(poly_substitute(MultiIndex{1, 1}, 1.0, w).is_zero());
}

TEST(PolySubstitute, ComplexScalarPower) {
  const Complex lambda(-0.015, 1.731984);
  std::vector<MultiPoly> w{MultiPoly::variable(2, 5, 0, lambda)};
  const auto r = poly_substitute(MultiIndex{2}, 1.0, w);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_LE(std::abs(r.coeff(MultiIndex{2, 0}) - lambda * lambda), 1e-15);
}

TEST(PolySubstitute, DegreeAboveCapVanishes) {
  std::vector<MultiPoly> w{s1(3)};
  EXPECT_TRUE(poly_substitute(MultiIndex{4}, 1.0, w).is_zero());
}

TEST(PolyDiff, Examples) {
  EXPECT_EQ(poly_diff(from_terms({{{2, 1}, 1.0}}), 0), from_terms({{{1, 1}, 2.0}}));
  EXPECT_TRUE(poly_diff(from_terms({{{3, 0}, 1.0}}), 1).is_zero());
  const Complex c(0.3, -2.0);
  EXPECT_EQ(poly_diff(MultiPoly::variable(2, 5, 0, c), 0), MultiPoly::constant(2, 5, c));
  EXPECT_THROW(poly_diff(s1(), 2), Error);
}

TEST(PolyDiff, ProductRuleBelowTruncation) {
  std::mt19937_64 rng(3);
  const unsigned order = 6;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_poly(rng, order, 4), q = random_poly(rng, order, 4);
    for (std::size_t v = 0; v < 2; ++v) {
      const auto lhs = truncated(poly_diff(poly_mul(p, q), v), order - 1);
      const auto rhs = truncated(poly_add(poly_mul(poly_diff(p, v), q), poly_mul(p, poly_diff(q, v))), order - 1);
      expect_close(lhs, rhs, 1e-12);
    }
  }
}

TEST(GradedLex, OrderingOfTwoVariables) {
  const auto p = from_terms({{{0, 2}, 1.0}, {{1, 0}, 1.0}, {{2, 0}, 1.0}, {{0, 0}, 1.0}, {{1, 1}, 1.0}, {{0, 1}, 1.0}});
  std::vector<MultiIndex> seen;
  for (const auto& [m, c] : p.terms()) seen.push_back(m);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(seen, expected);
}

TEST(BivariateSeries, RoundTripAndEvaluation) {
  std::mt19937_64 rng(5);
  const auto p = random_poly(rng, 5, 5);
  const auto s = BivariateSeries::from_multipoly(p);
  expect_close(s.to_multipoly(), p, 1e-15);
  const std::array<Complex, 2> x{Complex(0.3, 0.1), Complex(-0.2, 0.4)};
  EXPECT_LE(std::abs(s.evaluate(x[0], x[1]) - p.evaluate(x)), 1e-14);
  const auto dp = poly_diff(p, 1);
  EXPECT_LE(std::abs(s.evaluate_diff(x[0], x[1], 1) - dp.evaluate(x)), 1e-13);
}

}  // namespace
}  // namespace ssmr
