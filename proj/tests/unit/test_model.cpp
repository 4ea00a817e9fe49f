#include <cmath>
#include <random>

#include "fixtures.hpp"

namespace ssmr {
namespace {

using test::oscillator;
using test::shaw_pierre;
using test::shaw_pierre_modal;

ModalModel with_spectrum(std::initializer_list<Complex> lambda) {
  ModalModel mm;
  mm.lambda = VectorXcd(static_cast<Eigen::Index>(lambda.size()));
  Eigen::Index i = 0;
  for (Complex l : lambda) mm.lambda[i++] = l;
  mm.n = lambda.size() / 2;
  return mm;
}

TEST(FirstOrder, TwoMassStateMatrix) {
  const auto fos = to_first_order(shaw_pierre());
  ASSERT_EQ(fos.A.rows(), 4);
  EXPECT_DOUBLE_EQ(fos.A(2, 0), -6.0);
  EXPECT_DOUBLE_EQ(fos.A(2, 1), 3.0);
  EXPECT_DOUBLE_EQ(fos.A(3, 0), 3.0);
  EXPECT_DOUBLE_EQ(fos.A(3, 1), -6.0);
  EXPECT_TRUE(fos.A.topLeftCorner(2, 2).isZero());
  EXPECT_TRUE(fos.A.topRightCorner(2, 2).isIdentity());
  EXPECT_EQ(fos.Fp, (VectorXd(4) << 0, 0, 3, 0).finished());
}

TEST(FirstOrder, LinearSystemHasNoNonlinearity) {
  const auto fos = to_first_order(test::shaw_pierre_linear());
  EXPECT_TRUE(fos.Gp.monomials.empty());
  EXPECT_TRUE(fos.Gp.evaluate_real(VectorXd::Ones(4)).isZero());
}

TEST(FirstOrder, UndampedDuffing) {
  const auto fos = to_first_order(oscillator(1.0, 0.0, 1.0, 1.0, 0.0));
  EXPECT_EQ(fos.A, (MatrixXd(2, 2) << 0, 1, -1, 0).finished());
  const VectorXd g = fos.Gp.evaluate_real((VectorXd(2) << 2.0, 5.0).finished());
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], -8.0);
}

TEST(FirstOrder, RejectsMalformedSystems) {
  auto s = shaw_pierre();
  s.K(0, 1) = 1.0;
  EXPECT_THROW(to_first_order(s), Error);
  s = shaw_pierre();
  s.M(0, 0) = -1.0;
  EXPECT_THROW(to_first_order(s), Error);
  s = shaw_pierre();
  s.g.push_back({0, 1.0, MultiIndex{1, 0, 0, 0}});
  EXPECT_THROW(to_first_order(s), Error);
}

TEST(Modal, MasterEigenvalueMatchesClosedForm) {
  const double w = std::sqrt(3.0), zeta = 0.03 / (2.0 * std::sqrt(3.0));
  const Complex expected(-zeta * w, w * std::sqrt(1.0 - zeta * zeta));
  const auto& mm = *shaw_pierre_modal();
  EXPECT_LE(std::abs(mm.lambda1() - expected), 1e-12);
  EXPECT_NEAR(mm.lambda1().imag(), 1.731984, 5e-6);
  EXPECT_EQ(mm.lambda[1], std::conj(mm.lambda[0]));
}

TEST(Modal, FirstPositionNormalizedEigenvector) {
  const auto& mm = *shaw_pierre_modal();
  // In-phase mode: displacement entries equal, velocity entries lambda times those.
  EXPECT_LE(std::abs(mm.T(0, 0) - 1.0), 1e-12);
  EXPECT_LE(std::abs(mm.T(1, 0) - 1.0), 1e-12);
  EXPECT_LE(std::abs(mm.T(2, 0) - mm.lambda1()), 1e-12);
  EXPECT_LE(std::abs(mm.T(3, 0) - mm.lambda1()), 1e-12);
  EXPECT_LE(std::abs(mm.T(1, 2) + 1.0), 1e-12);
}

TEST(Modal, InverseIsAccurate) {
  for (const auto& mm : {shaw_pierre_modal(), test::beam_modal()}) {
    const auto N = static_cast<Eigen::Index>(mm->dim());
    const double r = (mm->T * mm->T_inv - MatrixXcd::Identity(N, N)).norm() / std::sqrt(static_cast<double>(N));
    EXPECT_LE(r, 1e-10);
  }
}

TEST(Modal, ModalVectorFieldIsTransformedField) {
  const auto& mm = *shaw_pierre_modal();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> u(0.0, 0.5);
  const auto N = static_cast<Eigen::Index>(mm.dim());
  for (int k = 0; k < 100; ++k) {
    VectorXcd q(N);
    for (Eigen::Index i = 0; i < N; ++i) q[i] = Complex(u(rng), u(rng));
    const VectorXcd x = mm.T * q;
    const VectorXcd lhs = mm.T_inv * (mm.fos.A.cast<Complex>() * x + mm.fos.Gp.evaluate(x));
    const VectorXcd rhs = mm.lambda.cwiseProduct(q) + mm.Gm(q);
    EXPECT_LE((lhs - rhs).norm(), 1e-9 * rhs.norm());
  }
}

TEST(Modal, ConjugatePairsGiveConjugateRows) {
  const auto& mm = *shaw_pierre_modal();
  std::mt19937_64 rng(23);
  std::normal_distribution<double> u(0.0, 0.5);
  const auto N = static_cast<Eigen::Index>(mm.dim());
  VectorXcd q(N);
  for (Eigen::Index i = 0; i < N; i += 2) {
    q[i] = Complex(u(rng), u(rng));
    q[i + 1] = std::conj(q[i]);
  }
  const VectorXcd g = mm.Gm(q);
  for (std::size_t i = 0; i < mm.dim(); ++i) {
    const auto j = static_cast<Eigen::Index>(conjugate_partner(mm, i));
    EXPECT_LE(std::abs(g[j] - std::conj(g[static_cast<Eigen::Index>(i)])), 1e-14 * g.norm());
  }
}

TEST(Modal, BeamSlowestPair) {
  const auto& mm = *test::beam_modal();
  EXPECT_LE(test::rel_err(mm.lambda1().real(), -0.0061884), 1e-3);
  EXPECT_LE(test::rel_err(mm.lambda1().imag(), 7.0005), 1e-3);
}

TEST(Modal, HigherModeSelection) {
  const auto mm = modal_decompose(to_first_order(shaw_pierre()), 2);
  EXPECT_NEAR(mm.lambda1().real(), -0.0669615, 1e-7);
  EXPECT_THROW(modal_decompose(to_first_order(shaw_pierre()), 3), Error);
}

TEST(Modal, NegativeDampingIsUnstable) {
  try {
    modal_decompose(to_first_order(oscillator(1.0, -0.1, 1.0, 0.0, 1.0)));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unstable_origin);
  }
}

TEST(SpectralQuotient, Examples) {
  EXPECT_EQ(spectral_quotient(*shaw_pierre_modal()), 4);
  EXPECT_EQ(spectral_quotient(with_spectrum({{-1, 2}, {-1, -2}, {-1, 5}, {-1, -5}})), 1);
  EXPECT_EQ(spectral_quotient(with_spectrum({{-1, 2}, {-1, -2}, {-3.7, 5}, {-3.7, -5}})), 3);
}

TEST(Nonresonance, TwoMassPasses) {
  const auto rep = check_nonresonance(*shaw_pierre_modal(), 4);
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_NEAR(rep.min_margin, 0.0069615, 1e-7);
}

TEST(Nonresonance, ConstructedResonanceFails) {
  const auto rep = check_nonresonance(with_spectrum({{-1, 2}, {-1, -2}, {-2, 7}, {-2, -7}}), 4);
  ASSERT_FALSE(rep.pass);
  ASSERT_FALSE(rep.violations.empty());
  EXPECT_EQ(rep.violations.front().a, 2);
  EXPECT_EQ(rep.violations.front().b, 0);
  EXPECT_EQ(rep.violations.front().l, 3u);
  EXPECT_NE(describe(rep).find("(2,0,3)"), std::string::npos);
}

TEST(Nonresonance, SingleModeIsVacuous) {
  const auto mm = modal_decompose(to_first_order(oscillator(1.0, 0.1, 1.0, 1.0, 1.0)));
  EXPECT_TRUE(check_nonresonance(mm, 2).pass);
  EXPECT_THROW(check_nonresonance(mm, 1), Error);
}

}  // namespace
}  // namespace ssmr
