#pragma once

// Zeros of a(rho) across expansion orders, spurious-root screening and the
// cubic-order isola criterion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"
#include "ssmr/reduced.hpp"
#include "ssmr/ssm_auto.hpp"

namespace ssmr {

// Roots of sum c[i] x^i via the companion matrix; trailing near-zero
// coefficients (relative to the largest) are dropped first.
inline std::vector<Complex> polynomial_roots(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  if (c.size() < 2) return {};
  const auto deg = static_cast<Eigen::Index>(c.size() - 1);
  // x = s y with s = |c_0 / c_deg|^(1/deg) keeps the companion matrix balanced.
  double s = 1.0;
  if (c.front() != 0.0) s = std::pow(std::abs(c.front() / c.back()), 1.0 / static_cast<double>(deg));
  std::vector<double> cs(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) cs[i] = c[i] * std::pow(s, static_cast<double>(i));
  MatrixXd comp = MatrixXd::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -cs[static_cast<std::size_t>(i)] / cs.back();
  Eigen::EigenSolver<MatrixXd> es(comp, false);
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < deg; ++i) out.push_back(s * es.eigenvalues()[i]);
  // Newton polish on the original polynomial.
  for (auto& z : out) {
    for (int it = 0; it < 4; ++it) {
      Complex p = 0.0, dp = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
      }
      if (dp == Complex{}) break;
      const Complex step = p / dp;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      const Complex next = z - step;
      Complex pn = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) pn = pn * next + c[k];
      if (std::abs(pn) >= std::abs(p)) break;
      z = next;
    }
  }
  return out;
}

struct RootTrajectory {
  std::map<unsigned, Complex> by_order;  // M -> root (representative with Re >= 0)
  bool nonspurious = false;
  bool positive_real = false;
  double cauchy_change = std::numeric_limits<double>::infinity();
  double radius_fraction = std::numeric_limits<double>::infinity();
};

struct RootTrack {
  unsigned M_min = 1, M_max = 1;
  std::map<unsigned, std::vector<Complex>> roots;  // nontrivial roots per order, Re >= 0
  std::map<unsigned, double> radius;               // convergence radius estimate in rho
  std::vector<RootTrajectory> trajectories;
  std::vector<std::string> warnings;
  std::vector<double> a_coeffs;  // Re(lambda_1), Re(gamma_1), ...
};

struct ClassifyOptions {
  double cauchy_tol = 1e-3;
  double radius_fraction = 0.8;
  double real_tol = 1e-9;
};

inline double radius_estimate(const std::vector<double>& a, unsigned M) {
  // |a_{i-1} / a_i|^(1/2) for the rho^2 polynomial, geometric mean of the last three ratios.
  double logsum = 0.0;
  int count = 0;
  for (unsigned i = M; i + 3 > M && i >= 1; --i) {
    if (a[i] == 0.0 || a[i - 1] == 0.0) continue;
    logsum += 0.5 * std::log(std::abs(a[i - 1] / a[i]));
    ++count;
    if (i == 1) break;
  }
  return count ? std::exp(logsum / count) : std::numeric_limits<double>::infinity();
}

inline RootTrack roots_of_a(const AutonomousSsm& ssm, unsigned M_min, unsigned M_max) {
  if (M_min < 1 || M_max < M_min) throw Error(ErrorKind::invalid_input, "invalid order range");
  RootTrack rt;
  rt.M_min = M_min;
  rt.a_coeffs = a_coefficients(ssm, ssm.half_order());
  unsigned cap = std::min<unsigned>(M_max, ssm.half_order());
  for (unsigned i = 1; i <= cap; ++i)
    if (!std::isfinite(rt.a_coeffs[i]) || std::abs(rt.a_coeffs[i]) > 1e250) {
      rt.warnings.push_back("coefficient overflow; order capped at M = " + std::to_string(i - 1));
      cap = i - 1;
      break;
    }
  if (cap < M_max && cap == ssm.half_order() && rt.warnings.empty())
    rt.warnings.push_back("expansion only available up to M = " + std::to_string(cap));
  rt.M_max = std::max(cap, M_min);

  for (unsigned M = M_min; M <= cap; ++M) {
    std::vector<double> c(rt.a_coeffs.begin(), rt.a_coeffs.begin() + M + 1);
    std::vector<Complex> r;
    for (const Complex& x : polynomial_roots(c)) {
      Complex z = std::sqrt(x);
      if (z.real() < 0.0) z = -z;
      r.push_back(z);
    }
    std::sort(r.begin(), r.end(), [](Complex p, Complex q) {
      return std::abs(p) != std::abs(q) ? std::abs(p) < std::abs(q) : std::arg(p) < std::arg(q);
    });
    rt.roots[M] = r;
    rt.radius[M] = radius_estimate(rt.a_coeffs, M);

    // Greedy nearest-neighbour continuation of the existing trajectories.
    std::vector<bool> used(r.size(), false);
    struct Cand {
      double dist;
      std::size_t traj, root;
    };
    std::vector<Cand> cands;
    for (std::size_t t = 0; t < rt.trajectories.size(); ++t) {
      auto& bo = rt.trajectories[t].by_order;
      if (bo.empty() || bo.rbegin()->first != M - 1) continue;
      for (std::size_t k = 0; k < r.size(); ++k) cands.push_back({std::abs(r[k] - bo.rbegin()->second), t, k});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.dist < y.dist; });
    std::vector<bool> traj_done(rt.trajectories.size(), false);
    for (const auto& cd : cands) {
      if (used[cd.root] || traj_done[cd.traj]) continue;
      used[cd.root] = true;
      traj_done[cd.traj] = true;
      rt.trajectories[cd.traj].by_order[M] = r[cd.root];
    }
    for (std::size_t k = 0; k < r.size(); ++k)
      if (!used[k]) {
        RootTrajectory tr;
        tr.by_order[M] = r[k];
        rt.trajectories.push_back(tr);
      }
  }
  return rt;
}

inline RootTrack roots_of_a(const ModalModel& mm, unsigned M_min, unsigned M_max) {
  return roots_of_a(compute_autonomous_ssm(mm, 2 * M_max + 1), M_min, M_max);
}

// Marks trajectories non-spurious when they settle (Cauchy test over the last
// three orders) well inside the estimated convergence radius.
inline void classify_roots(RootTrack& rt, const ClassifyOptions& opt = {}) {
  const unsigned top = rt.roots.empty() ? 0 : rt.roots.rbegin()->first;
  if (rt.roots.size() < 3) throw Error(ErrorKind::insufficient_data, "root classification needs at least three orders");
  const double radius = rt.radius.at(top);
  for (auto& tr : rt.trajectories) {
    tr.nonspurious = false;
    const auto& bo = tr.by_order;
    if (!bo.count(top) || !bo.count(top - 1) || !bo.count(top - 2)) continue;
    const Complex r0 = bo.at(top), r1 = bo.at(top - 1), r2 = bo.at(top - 2);
    tr.cauchy_change = std::max(std::abs(r0 - r1) / std::abs(r0), std::abs(r1 - r2) / std::abs(r1));
    tr.radius_fraction = std::abs(r0) / radius;
    tr.positive_real = std::abs(r0.imag()) <= opt.real_tol * std::abs(r0) && r0.real() > 0.0;
    tr.nonspurious = tr.cauchy_change < opt.cauchy_tol && tr.radius_fraction < opt.radius_fraction;
  }
}

struct NonspuriousRoot {
  double rho = 0.0;
  double slope = 0.0;  // d a / d rho at the root
  bool transverse = false;
};

// Positive real non-spurious roots at the highest order with their transversality margin.
inline std::vector<NonspuriousRoot> nonspurious_positive_roots(const RootTrack& rt) {
  std::vector<NonspuriousRoot> out;
  const unsigned top = rt.roots.empty() ? 0 : rt.roots.rbegin()->first;
  const double re1 = rt.a_coeffs.at(0);
  for (const auto& tr : rt.trajectories) {
    if (!tr.nonspurious || !tr.positive_real) continue;
    const double rho = tr.by_order.at(top).real();
    double slope = 0.0;
    for (unsigned i = 0; i <= top; ++i) slope += (2.0 * i + 1.0) * rt.a_coeffs[i] * std::pow(rho, 2.0 * i);
    const double rho1 = rho;
    out.push_back({rho, slope, std::abs(slope) > 1e-6 * std::abs(re1) / rho1});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.rho < y.rho; });
  return out;
}

struct LeadingIsola {
  bool exists = false;
  double rho1 = std::numeric_limits<double>::quiet_NaN();
  double eps_m = std::numeric_limits<double>::quiet_NaN();
  double rho_tilde = std::numeric_limits<double>::quiet_NaN();  // double fold at eps_m
  bool disconnected = false;
};

inline LeadingIsola leading_isola(Complex lambda1, Complex gamma1, Complex c00, double eps) {
  LeadingIsola li;
  const double re_l = lambda1.real(), re_g = gamma1.real();
  if (!(re_g > 0.0) || !(re_l < 0.0)) return li;
  li.exists = true;
  li.rho1 = std::sqrt(std::abs(re_l) / re_g);
  li.rho_tilde = std::sqrt(std::abs(re_l) / (3.0 * re_g));
  li.eps_m = std::sqrt(4.0 * std::pow(std::abs(re_l), 3) / (27.0 * re_g)) / std::abs(c00);
  li.disconnected = eps < li.eps_m;
  return li;
}

inline LeadingIsola leading_isola(const AutonomousSsm& ssm, Complex c00, double eps,
                                  const RootTrack* track = nullptr) {
  if (ssm.gamma.empty()) throw Error(ErrorKind::invalid_input, "cubic coefficient not available");
  LeadingIsola li = leading_isola(ssm.lambda1, ssm.gamma[0], c00, eps);
  if (li.exists && track) {
    // Require a non-spurious positive root near the cubic estimate.
    bool found = false;
    for (const auto& r : nonspurious_positive_roots(*track))
      if (std::abs(r.rho - li.rho1) < 0.5 * li.rho1) found = true;
    if (!found) {
      li.exists = false;
      li.disconnected = false;
    }
  }
  return li;
}

// Non-negative roots of Re(lambda_1) rho + Re(gamma_1) rho^3 = +-eps |c00|.
inline std::vector<double> fold_points(double re_lambda, double re_gamma, double c_abs, double eps,
                                       double double_root_tol = 1e-6) {
  std::vector<double> out;
  auto collect = [&](double rhs) {
    const auto roots = polynomial_roots({-rhs, re_lambda, 0.0, re_gamma});
    std::vector<Complex> r = roots;
    if (re_gamma == 0.0 && re_lambda != 0.0) r = {Complex(rhs / re_lambda, 0.0)};
    for (const Complex& z : r)
      if (std::abs(z.imag()) <= double_root_tol * std::max(std::abs(z), 1e-300) && z.real() >= 0.0)
        out.push_back(z.real());
  };
  if (eps == 0.0) {
    out.push_back(0.0);
    if (re_gamma != 0.0 && -re_lambda / re_gamma > 0.0) out.push_back(std::sqrt(-re_lambda / re_gamma));
    return out;
  }
  collect(eps * c_abs);
  collect(-eps * c_abs);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> fold_points(const ReducedDynamics& rd, double eps) {
  if (rd.a_coeffs.size() < 2 || rd.f1.empty()) throw Error(ErrorKind::invalid_input, "cubic coefficients required");
  const double c_abs = std::hypot(rd.f1[0], rd.f2[0]);
  return fold_points(rd.a_coeffs[0], rd.a_coeffs[1], c_abs, eps);
}

}  // namespace ssmr
