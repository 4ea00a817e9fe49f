#include <cmath>
#include <random>

#include "fixtures.hpp"

namespace ssmr {
namespace {

using test::shaw_pierre_modal;

TEST(Reduced, BeamPolarCoefficients) {
  const ReducedModel model(test::beam_modal(), 3, 0);
  const auto rd = model.at(7.0, 0.002);
  ASSERT_EQ(rd.a_coeffs.size(), 2u);
  EXPECT_LE(test::rel_err(rd.a_coeffs[0], -0.0061884), 1e-2);
  EXPECT_LE(test::rel_err(rd.a_coeffs[1], 0.036202), 1e-2);
  EXPECT_LE(test::rel_err(rd.b_coeffs[0], 7.0005), 1e-2);
  EXPECT_LE(test::rel_err(rd.b_coeffs[1], 0.031689), 1e-2);
}

TEST(Reduced, CubicTruncationForcingFunctions) {
  const ReducedModel model(shaw_pierre_modal(), 3, 0);
  const auto rd = model.at(1.73, 0.0027);
  const Complex c = model.c00();
  EXPECT_EQ(rd.f1, std::vector<double>{c.real()});
  EXPECT_EQ(rd.g2, std::vector<double>{c.real()});
  EXPECT_EQ(rd.f2, std::vector<double>{c.imag()});
  EXPECT_EQ(rd.g1, std::vector<double>{c.imag()});
}

TEST(Reduced, ForcedCorrectionsShareTheirCPart) {
  const ReducedModel model(shaw_pierre_modal(), 5, 2);
  const auto rd = model.at(1.74, 0.0027);
  const auto fr = model.forced().at(1.74);
  ASSERT_EQ(rd.f1.size(), 3u);
  for (std::size_t i = 1; i < rd.f1.size(); ++i) {
    EXPECT_DOUBLE_EQ(rd.f1[i] + rd.g2[i], 2.0 * fr->c_ii[i - 1].real());
    EXPECT_DOUBLE_EQ(rd.f1[i] - rd.g2[i], 2.0 * fr->d_pm[i - 1].real());
  }
  EXPECT_THROW(ReducedModel(shaw_pierre_modal(), 5, 3), Error);
}

TEST(Reduced, LinearSystem) {
  const ReducedModel model(test::linear_modal(), 5, 2);
  const auto rd = model.at(1.7, 0.001);
  const Complex l = model.modal().lambda1();
  EXPECT_EQ(rd.a_coeffs, (std::vector<double>{l.real(), 0.0, 0.0}));
  EXPECT_EQ(rd.b_coeffs, (std::vector<double>{l.imag(), 0.0, 0.0}));
  for (const auto* f : {&rd.f1, &rd.f2, &rd.g1, &rd.g2})
    for (std::size_t i = 1; i < f->size(); ++i) EXPECT_EQ((*f)[i], 0.0);
}

TEST(Reduced, OrderMismatchIsRejected) {
  const auto mm = shaw_pierre_modal();
  const auto ssm3 = compute_autonomous_ssm(*mm, 3);
  const auto fr5 = compute_nonautonomous_ssm(compute_autonomous_ssm(*mm, 5), *mm, 1.7, 5);
  EXPECT_THROW(assemble_polar(ssm3, fr5, 0.001), Error);
}

TEST(ZeroProblem, TrivialAndBackboneSolutions) {
  const ReducedModel model(shaw_pierre_modal(), 3, 0);
  const auto rd = model.at(1.73, 0.0);
  EXPECT_EQ(zero_problem(rd, 0.0, 1.73, 0.4), Eigen::Vector2d::Zero());
  const double rho0 = std::sqrt(-rd.a_coeffs[0] / rd.a_coeffs[1]);
  for (double psi : {0.0, 1.0, 2.5, 4.0, 6.0}) EXPECT_LE(zero_problem(rd, rho0, rd.b(rho0), psi).norm(), 1e-15);
}

TEST(ZeroProblem, PolarFieldMatchesComplexReducedDynamics) {
  const auto mm = shaw_pierre_modal();
  const ReducedModel model(mm, 7, 3);
  const auto& ssm = model.autonomous();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double rho = 0.01 + 0.3 * u(rng), theta = 2 * std::numbers::pi * u(rng);
    const double omega = 1.6 + 0.3 * u(rng), phi = 2 * std::numbers::pi * u(rng), eps = 0.005 * u(rng);
    const auto fr = model.forced().at(omega);
    const Complex s1 = std::polar(rho, theta), s2 = std::conj(s1);
    const Complex ep = std::polar(1.0, phi);
    const Complex sdot = ssm.R[0].evaluate(s1, s2) +
                         eps * (fr->R1_plus[0].evaluate(s1, s2) * ep + fr->R1_minus[0].evaluate(s1, s2) * std::conj(ep));
    const Complex z = sdot * std::polar(1.0, -theta);
    const Eigen::Vector2d expected(z.real(), z.imag() / rho - omega);
    const auto rd = model.at(omega, eps);
    const Eigen::Vector2d got = polar_field(rd, rho, theta - phi);
    EXPECT_LE((got - expected).norm(), 1e-12 * expected.norm());
  }
}

TEST(ZeroProblem, UnforcedAmplitudeIsMonotoneBetweenRoots) {
  const ReducedModel model(test::modal_of(test::quintic()), 5, 0);
  const auto rd = model.at(1.73, 0.0);
  auto roots = polynomial_roots(std::vector<double>(rd.a_coeffs.begin(), rd.a_coeffs.end()));
  std::vector<double> cuts{0.0};
  for (Complex x : roots)
    if (std::abs(x.imag()) < 1e-12 && x.real() > 0.0) cuts.push_back(std::sqrt(x.real()));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(1.0);
  ASSERT_EQ(cuts.size(), 4u);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k] + 1e-6, hi = cuts[k + 1] - 1e-6;
    const double sign = std::copysign(1.0, rd.a(0.5 * (lo + hi)));
    for (int j = 0; j <= 200; ++j) EXPECT_GT(sign * rd.a(lo + (hi - lo) * j / 200.0), 0.0);
  }
}

TEST(Stability, LinearResponseIsStable) {
  const ReducedModel model(test::linear_modal(), 3, 1);
  const double omega = 1.75, eps = 0.001;
  const auto rd = model.at(omega, eps);
  const double rho = linear_frc_closed_form(model.modal(), eps, omega);
  const auto root = pick(k_branches(rd, rho), Branch::plus);
  ASSERT_TRUE(root.has_value());
  EXPECT_EQ(fixed_point_stability(rd, rho, root->psi).stability, Stability::stable);
}

TEST(Stability, AnalyticJacobianMatchesFiniteDifferences) {
  const ReducedModel model(shaw_pierre_modal(), 5, 2);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double rho = 0.02 + 0.25 * u(rng), psi = 2 * std::numbers::pi * u(rng), omega = 1.65 + 0.2 * u(rng);
    const auto rd = model.at(omega, 0.0027);
    const Eigen::Matrix2d J = polar_jacobian(rd, rho, psi), F = polar_jacobian_fd(rd, rho, psi);
    const double floor = 1e-6 * J.cwiseAbs().maxCoeff();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        worst = std::max(worst, std::abs(J(i, j) - F(i, j)) / std::max(std::abs(J(i, j)), floor));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Stability, Classification) {
  EXPECT_EQ(classify((Eigen::Matrix2d() << -1, 0, 0, -2).finished()), Stability::stable);
  EXPECT_EQ(classify((Eigen::Matrix2d() << -1, 0, 0, 0.1).finished()), Stability::unstable);
  EXPECT_EQ(classify((Eigen::Matrix2d() << -1, 0, 0, 1e-10).finished()), Stability::fold_degenerate);
  EXPECT_EQ(classify((Eigen::Matrix2d() << 0.01, 1, -1, 0.01).finished()), Stability::unstable);
}

}  // namespace
}  // namespace ssmr
