#pragma once

// Polar reduced dynamics on the time-periodic manifold,
//   rho'  = a(rho) + eps (f1 cos psi + f2 sin psi)
//   psi'  = b(rho) - Omega + eps/rho (g1 cos psi - g2 sin psi)
// with s1 = rho e^{i theta} and psi = theta - Omega t.

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"
#include "ssmr/ssm_auto.hpp"
#include "ssmr/ssm_forced.hpp"

namespace ssmr {

namespace detail {

// sum c[i] rho^(2i + shift)
inline double even_poly(const std::vector<double>& c, double rho, int shift) {
  const double r2 = rho * rho;
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * r2 + c[i];
  return shift == 1 ? acc * rho : acc;
}

inline double even_poly_diff(const std::vector<double>& c, double rho, int shift) {
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int p = static_cast<int>(2 * i) + shift;
    if (p > 0) acc += p * c[i] * std::pow(rho, p - 1);
  }
  return acc;
}

}  // namespace detail

struct ReducedDynamics {
  unsigned M = 1;
  std::vector<double> a_coeffs;  // rho, rho^3, ...
  std::vector<double> b_coeffs;  // 1, rho^2, ...
  std::vector<double> f1, f2, g1, g2;  // 1, rho^2, ...
  double omega = 0.0;
  double eps = 0.0;

  double a(double rho) const { return detail::even_poly(a_coeffs, rho, 1); }
  double b(double rho) const { return detail::even_poly(b_coeffs, rho, 0); }
  double da(double rho) const { return detail::even_poly_diff(a_coeffs, rho, 1); }
  double db(double rho) const { return detail::even_poly_diff(b_coeffs, rho, 0); }
  double F1(double rho) const { return detail::even_poly(f1, rho, 0); }
  double F2(double rho) const { return detail::even_poly(f2, rho, 0); }
  double G1(double rho) const { return detail::even_poly(g1, rho, 0); }
  double G2(double rho) const { return detail::even_poly(g2, rho, 0); }
  double dF1(double rho) const { return detail::even_poly_diff(f1, rho, 0); }
  double dF2(double rho) const { return detail::even_poly_diff(f2, rho, 0); }
  double dG1(double rho) const { return detail::even_poly_diff(g1, rho, 0); }
  double dG2(double rho) const { return detail::even_poly_diff(g2, rho, 0); }

  // Discriminant eps^2 (f1^2 + f2^2) - a^2 of the half-angle quadratic.
  double discriminant(double rho) const {
    const double p = eps * F1(rho), q = eps * F2(rho), r = a(rho);
    return p * p + q * q - r * r;
  }
};

// Coefficients from lambda_1, gamma_i and the forced reduced coefficients.
// forced_terms limits how many rho^(2i) forcing corrections are kept.
inline ReducedDynamics assemble_polar(const AutonomousSsm& ssm, Complex c00, const std::vector<Complex>& c_ii,
                                      const std::vector<Complex>& d_pm, unsigned forced_terms, double omega,
                                      double eps) {
  if (c_ii.size() != d_pm.size()) throw Error(ErrorKind::invalid_input, "forced coefficient lists disagree");
  if (forced_terms > c_ii.size())
    throw Error(ErrorKind::invalid_input, "forced reduction computed to lower order than requested");
  ReducedDynamics rd;
  rd.M = ssm.half_order();
  rd.omega = omega;
  rd.eps = eps;
  rd.a_coeffs = {ssm.lambda1.real()};
  rd.b_coeffs = {ssm.lambda1.imag()};
  for (const auto& g : ssm.gamma) {
    rd.a_coeffs.push_back(g.real());
    rd.b_coeffs.push_back(g.imag());
  }
  rd.f1 = {c00.real()};
  rd.f2 = {c00.imag()};
  rd.g1 = {c00.imag()};
  rd.g2 = {c00.real()};
  for (unsigned i = 0; i < forced_terms; ++i) {
    const Complex c = c_ii[i], d = d_pm[i];
    rd.f1.push_back(c.real() + d.real());
    rd.f2.push_back(c.imag() - d.imag());
    rd.g1.push_back(c.imag() + d.imag());
    rd.g2.push_back(c.real() - d.real());
  }
  return rd;
}

inline ReducedDynamics assemble_polar(const AutonomousSsm& ssm, const ForcedReduction& fr, double eps) {
  if (fr.order != ssm.order) throw Error(ErrorKind::invalid_input, "autonomous and forced orders differ");
  return assemble_polar(ssm, fr.c00, fr.c_ii, fr.d_pm, static_cast<unsigned>(fr.c_ii.size()), fr.omega, eps);
}

// F(u) for u = (rho, Omega, psi); f and g are taken at the Omega rd was assembled for.
inline Eigen::Vector2d zero_problem(const ReducedDynamics& rd, double rho, double omega, double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  return {rd.a(rho) + rd.eps * (rd.F1(rho) * c + rd.F2(rho) * s),
          (rd.b(rho) - omega) * rho + rd.eps * (rd.G1(rho) * c - rd.G2(rho) * s)};
}

// (rho', psi') at fixed Omega.
inline Eigen::Vector2d polar_field(const ReducedDynamics& rd, double rho, double psi) {
  if (rho <= 0.0) throw Error(ErrorKind::invalid_input, "polar chart is singular at rho = 0");
  const Eigen::Vector2d F = zero_problem(rd, rho, rd.omega, psi);
  return {F[0], F[1] / rho};
}

enum class Stability { stable, unstable, fold_degenerate };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::fold_degenerate: return "fold";
  }
  return "?";
}

inline constexpr double kFoldDegenerateTol = 1e-8;
inline constexpr double kJacobianFdStep = 1e-6;

inline Eigen::Matrix2d polar_jacobian(const ReducedDynamics& rd, double rho, double psi) {
  if (rho <= 0.0) throw Error(ErrorKind::invalid_input, "polar chart is singular at rho = 0");
  const double c = std::cos(psi), s = std::sin(psi), e = rd.eps;
  const double g = rd.G1(rho) * c - rd.G2(rho) * s;
  Eigen::Matrix2d J;
  J(0, 0) = rd.da(rho) + e * (rd.dF1(rho) * c + rd.dF2(rho) * s);
  J(0, 1) = e * (-rd.F1(rho) * s + rd.F2(rho) * c);
  J(1, 0) = rd.db(rho) - e * g / (rho * rho) + e / rho * (rd.dG1(rho) * c - rd.dG2(rho) * s);
  J(1, 1) = e / rho * (-rd.G1(rho) * s - rd.G2(rho) * c);
  return J;
}

inline Eigen::Matrix2d polar_jacobian_fd(const ReducedDynamics& rd, double rho, double psi,
                                         double h = kJacobianFdStep) {
  Eigen::Matrix2d J;
  J.col(0) = (polar_field(rd, rho + h, psi) - polar_field(rd, rho - h, psi)) / (2 * h);
  J.col(1) = (polar_field(rd, rho, psi + h) - polar_field(rd, rho, psi - h)) / (2 * h);
  return J;
}

inline Stability classify(const Eigen::Matrix2d& J, double tol = kFoldDegenerateTol) {
  const Eigen::Vector2cd ev = J.eigenvalues();
  const double top = std::max(ev[0].real(), ev[1].real());
  if (top > tol) return Stability::unstable;
  if (top < -tol) return Stability::stable;
  return Stability::fold_degenerate;
}

struct StabilityResult {
  Stability stability = Stability::stable;
  Eigen::Matrix2d jacobian;
  Eigen::Vector2cd eigenvalues;
};

inline StabilityResult fixed_point_stability(const ReducedDynamics& rd, double rho, double psi,
                                             double tol = kFoldDegenerateTol) {
  StabilityResult r;
  r.jacobian = polar_jacobian(rd, rho, psi);
  r.eigenvalues = r.jacobian.eigenvalues();
  r.stability = classify(r.jacobian, tol);
  return r;
}

// Reduced model that can be assembled at any (Omega, eps).
class ReducedModel {
 public:
  // forced_terms = 0 keeps only c_{1,0}; otherwise up to M rho^(2i) corrections.
  ReducedModel(std::shared_ptr<const ModalModel> mm, unsigned order, unsigned forced_terms,
               double resonance_tol = kInternalResonanceRelTol, double near_resonance_tol = kNearResonanceAbsTol)
      : mm_(std::move(mm)), forced_terms_(forced_terms) {
    ssm_ = std::make_shared<const AutonomousSsm>(compute_autonomous_ssm(*mm_, order, resonance_tol));
    if (forced_terms_ > ssm_->half_order())
      throw Error(ErrorKind::invalid_input, "forcing corrections exceed the expansion order");
    forced_ = std::make_shared<const ForcedSolver>(mm_, ssm_, order, near_resonance_tol);
    c00_ = leading_forcing_coefficient(*mm_);
  }

  const ModalModel& modal() const { return *mm_; }
  std::shared_ptr<const ModalModel> modal_ptr() const { return mm_; }
  const AutonomousSsm& autonomous() const { return *ssm_; }
  const ForcedSolver& forced() const { return *forced_; }
  unsigned order() const { return ssm_->order; }
  unsigned forced_terms() const { return forced_terms_; }
  Complex c00() const { return c00_; }
  bool omega_dependent() const { return forced_terms_ > 0; }

  ReducedDynamics at(double omega, double eps) const {
    if (forced_terms_ == 0) return assemble_polar(*ssm_, c00_, {}, {}, 0, omega, eps);
    const auto fr = forced_->at(omega);
    return assemble_polar(*ssm_, fr->c00, fr->c_ii, fr->d_pm, forced_terms_, omega, eps);
  }

 private:
  std::shared_ptr<const ModalModel> mm_;
  std::shared_ptr<const AutonomousSsm> ssm_;
  std::shared_ptr<const ForcedSolver> forced_;
  unsigned forced_terms_ = 0;
  Complex c00_;
};

}  // namespace ssmr
