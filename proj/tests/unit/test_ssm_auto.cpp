#include <cmath>

#include "fixtures.hpp"

namespace ssmr {
namespace {

using test::shaw_pierre_modal;

const AutonomousSsm& shaw_pierre_ssm(unsigned order) {
  static std::map<unsigned, AutonomousSsm> cache;
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_autonomous_ssm(*shaw_pierre_modal(), order)).first;
  return it->second;
}

TEST(AutonomousSsm, CubicCoefficientOfTwoMassSystem) {
  const auto& ssm = shaw_pierre_ssm(3);
  ASSERT_EQ(ssm.gamma.size(), 1u);
  // -3 alpha k / (4 m^2) with alpha = -0.6, k = 3, m = 1.
  EXPECT_LE(test::rel_err(ssm.gamma[0].real(), 1.35), 1e-6);
}

TEST(AutonomousSsm, BeamCubicCoefficient) {
  const auto ssm = compute_autonomous_ssm(*test::beam_modal(), 3);
  EXPECT_LE(test::rel_err(ssm.gamma[0].real(), 0.036202), 1e-2);
  EXPECT_LE(test::rel_err(ssm.gamma[0].imag(), 0.031689), 1e-2);
}

TEST(AutonomousSsm, LinearSystemIsItsEigenspace) {
  const auto& mm = *test::linear_modal();
  const auto ssm = compute_autonomous_ssm(mm, 7);
  for (Complex g : ssm.gamma) EXPECT_EQ(g, Complex{});
  for (std::size_t i = 0; i < ssm.W.size(); ++i)
    for (unsigned d = 2; d <= ssm.order; ++d)
      for (Complex c : ssm.W[i].part(d)) EXPECT_EQ(c, Complex{});
  EXPECT_LE(invariance_residual(ssm, mm, polydisk_samples(0.1, 32, 1)), 1e-14);
}

TEST(AutonomousSsm, LinearPartIsMasterEigenvectors) {
  const auto& ssm = shaw_pierre_ssm(5);
  EXPECT_EQ(ssm.W[0].at(1, 0), Complex(1.0));
  EXPECT_EQ(ssm.W[1].at(0, 1), Complex(1.0));
  EXPECT_EQ(ssm.W[0].at(0, 1), Complex{});
  for (std::size_t i = 2; i < ssm.W.size(); ++i) {
    EXPECT_EQ(ssm.W[i].at(1, 0), Complex{});
    EXPECT_EQ(ssm.W[i].at(0, 1), Complex{});
  }
  EXPECT_EQ(ssm.R[0].at(1, 0), ssm.lambda1);
  EXPECT_EQ(ssm.R[0].at(2, 1), ssm.gamma[0]);
  EXPECT_EQ(ssm.R[0].at(3, 2), ssm.gamma[1]);
  EXPECT_EQ(ssm.R[1].at(1, 2), std::conj(ssm.gamma[0]));
  // Resonant manifold coefficients are zeroed.
  EXPECT_EQ(ssm.W[0].at(2, 1), Complex{});
  EXPECT_EQ(ssm.W[1].at(1, 2), Complex{});
}

TEST(AutonomousSsm, ConjugateSymmetry) {
  const auto& mm = *shaw_pierre_modal();
  const auto& ssm = shaw_pierre_ssm(7);
  for (std::size_t i = 0; i < ssm.W.size(); ++i) {
    const std::size_t j = conjugate_partner(mm, i);
    for (unsigned d = 0; d <= ssm.order; ++d)
      for (unsigned b = 0; b <= d; ++b)
        EXPECT_LE(std::abs(ssm.W[j].at(b, d - b) - std::conj(ssm.W[i].at(d - b, b))), 1e-13);
  }
  for (unsigned d = 0; d <= ssm.order; ++d)
    for (unsigned b = 0; b <= d; ++b)
      EXPECT_LE(std::abs(ssm.R[1].at(b, d - b) - std::conj(ssm.R[0].at(d - b, b))), 1e-13);
}

TEST(AutonomousSsm, OriginIsAsymptoticallyStable) {
  const auto& ssm = shaw_pierre_ssm(5);
  const auto a = a_coefficients(ssm, ssm.half_order());
  EXPECT_LT(a.front(), 0.0);
  EXPECT_EQ(a.front(), ssm.lambda1.real());
}

TEST(AutonomousSsm, TruncationConsistency) {
  const auto& lo = shaw_pierre_ssm(5);
  const auto& hi = shaw_pierre_ssm(9);
  for (std::size_t i = 0; i < lo.gamma.size(); ++i) EXPECT_EQ(hi.gamma[i], lo.gamma[i]);
  for (std::size_t i = 0; i < lo.W.size(); ++i)
    for (unsigned d = 0; d <= lo.order; ++d) EXPECT_EQ(hi.W[i].part(d), lo.W[i].part(d));
}

TEST(AutonomousSsm, ResidualAtSmallRadius) {
  const auto& mm = *shaw_pierre_modal();
  EXPECT_LE(invariance_residual(shaw_pierre_ssm(3), mm, polydisk_samples(1e-3, 64, 1)), 1e-10);
}

TEST(AutonomousSsm, ResidualScalesWithOrder) {
  const auto& mm = *shaw_pierre_modal();
  const auto radii = log_radii(1e-3, 1e-1, 9);
  for (unsigned order : {3u, 5u, 7u}) {
    const auto& ssm = shaw_pierre_ssm(order);
    std::vector<double> res;
    for (double r : radii) res.push_back(invariance_residual(ssm, mm, polydisk_samples(r, 32, 1)));
    const double slope = loglog_slope(radii, res);
    EXPECT_GE(slope, order == 3 ? 3.8 : order - 0.2) << "order " << order;
  }
}

TEST(AutonomousSsm, OrderValidation) {
  EXPECT_THROW(compute_autonomous_ssm(*shaw_pierre_modal(), 4), Error);
  EXPECT_THROW(compute_autonomous_ssm(*shaw_pierre_modal(), 1), Error);
}

TEST(AutonomousSsm, ExactInnerResonanceIsReported) {
  // Second oscillator has lambda exactly three times the first: (3,0) resonates.
  MechanicalSystem s;
  s.n = 2;
  s.M = MatrixXd::Identity(2, 2);
  s.C = (MatrixXd(2, 2) << 0.1, 0, 0, 0.3).finished();
  s.K = (MatrixXd(2, 2) << 1, 0, 0, 9).finished();
  s.g.push_back({1, 1.0, MultiIndex{3, 0, 0, 0}});
  s.f = VectorXd::Zero(2);
  const auto mm = modal_decompose(to_first_order(s));
  try {
    compute_autonomous_ssm(mm, 3);
    FAIL() << "expected an internal resonance";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::internal_resonance);
  }
}

TEST(LogLogSlope, IgnoresRoundoffFloor) {
  const std::vector<double> r{1e-3, 1e-2, 1e-1, 1.0};
  EXPECT_NEAR(loglog_slope(r, {1e-16, 1e-10, 1e-6, 1e-2}), 4.0, 1e-12);
  EXPECT_THROW(loglog_slope(r, {1e-16, 1e-16, 1e-6, 1e-2}), Error);
}

}  // namespace
}  // namespace ssmr
