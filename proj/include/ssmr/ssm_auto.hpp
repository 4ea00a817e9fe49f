#pragma once

// Autonomous spectral submanifold in normal-form style:
//   Lambda W0(s) + G_m(W0(s)) = D_s W0(s) R0(s),
// solved degree by degree in diagonal modal coordinates. The reduced dynamics
// keeps only the inner-resonant monomials gamma_j s1^(j+1) s2^j (and conjugate).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"
#include "ssmr/polyalg.hpp"

namespace ssmr {

struct AutonomousSsm {
  unsigned order = 3;
  Complex lambda1;
  std::vector<BivariateSeries> W;        // one series per modal row
  std::array<BivariateSeries, 2> R;      // reduced dynamics rows
  std::vector<Complex> gamma;            // gamma_1 .. gamma_M
  std::vector<std::size_t> physical_vars;
  std::vector<BivariateSeries> X;        // physical coordinate series, aligned with physical_vars

  unsigned half_order() const { return (order - 1) / 2; }
  MultiPoly W0(std::size_t row) const { return W.at(row).to_multipoly(); }
  MultiPoly R0(std::size_t row) const { return R.at(row).to_multipoly(); }
};

// Index of the row carrying the conjugate eigenvalue.
inline std::size_t conjugate_partner(const ModalModel& mm, std::size_t i) {
  const Complex l = mm.lambda[static_cast<Eigen::Index>(i)];
  if (l.imag() == 0.0) return i;
  return l.imag() > 0 ? i + 1 : i - 1;
}

// Physical coordinate x_k(s) = sum_i T(k, i) W_i(s).
inline BivariateSeries physical_series(const std::vector<BivariateSeries>& W, const ModalModel& mm,
                                       std::size_t k) {
  BivariateSeries x(W.at(0).order());
  for (std::size_t i = 0; i < W.size(); ++i) {
    const Complex t = mm.T(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    if (t == Complex{}) continue;
    for (unsigned d = 0; d <= x.order(); ++d)
      for (unsigned j = 0; j <= d; ++j) x.part(d)[j] += t * W[i].part(d)[j];
  }
  return x;
}

namespace detail {

// Exponent vector flattened into the list of variable factors, e.g. x0^2 x3 -> {0, 0, 3}.
inline std::vector<std::size_t> factor_list(const MultiIndex& m) {
  std::vector<std::size_t> f;
  for (std::size_t v = 0; v < m.size(); ++v)
    for (unsigned e = 0; e < m[v]; ++e) f.push_back(v);
  return f;
}

inline bool auto_resonant(std::size_t row, unsigned a, unsigned b) {
  return (row == 0 && a == b + 1) || (row == 1 && b == a + 1);
}

}  // namespace detail

inline constexpr double kInternalResonanceRelTol = 1e-8;

inline AutonomousSsm compute_autonomous_ssm(const ModalModel& mm, unsigned order,
                                            double resonance_tol = kInternalResonanceRelTol) {
  if (order < 3 || order % 2 == 0)
    throw Error(ErrorKind::invalid_input, "expansion order must be odd and at least 3");
  const std::size_t N = mm.dim();
  const Complex l1 = mm.lambda[0], l2 = mm.lambda[1];

  AutonomousSsm ssm;
  ssm.order = order;
  ssm.lambda1 = l1;
  ssm.W.assign(N, BivariateSeries(order));
  ssm.R = {BivariateSeries(order), BivariateSeries(order)};
  ssm.W[0].at(1, 0) = 1.0;
  ssm.W[1].at(0, 1) = 1.0;
  ssm.R[0].at(1, 0) = l1;
  ssm.R[1].at(0, 1) = l2;
  ssm.physical_vars = mm.physical_vars;

  // Slot of each physical variable in X.
  std::vector<std::ptrdiff_t> slot(N, -1);
  for (std::size_t k = 0; k < ssm.physical_vars.size(); ++k) slot[ssm.physical_vars[k]] = static_cast<std::ptrdiff_t>(k);
  ssm.X.assign(ssm.physical_vars.size(), BivariateSeries(order));
  auto update_x = [&](unsigned d) {
    for (std::size_t k = 0; k < ssm.physical_vars.size(); ++k) {
      auto& part = ssm.X[k].part(d);
      std::fill(part.begin(), part.end(), Complex{});
      for (std::size_t i = 0; i < N; ++i) {
        const Complex t = mm.T(static_cast<Eigen::Index>(ssm.physical_vars[k]), static_cast<Eigen::Index>(i));
        const auto& w = ssm.W[i].part(d);
        for (unsigned j = 0; j <= d; ++j) part[j] += t * w[j];
      }
    }
  };
  update_x(1);

  // Prefix products of each monomial's factor chain: Q[t][p] = x_f0 * ... * x_fp.
  const std::size_t nmon = mm.monomials.size();
  std::vector<std::vector<std::size_t>> factors(nmon);
  std::vector<std::vector<BivariateSeries>> Q(nmon);
  for (std::size_t t = 0; t < nmon; ++t) {
    factors[t] = detail::factor_list(mm.monomials[t]);
    Q[t].assign(factors[t].size(), BivariateSeries(order));
  }

  std::vector<std::vector<Complex>> G(N);
  for (unsigned d = 2; d <= order; ++d) {
    for (std::size_t t = 0; t < nmon; ++t) {
      const auto& f = factors[t];
      for (std::size_t p = 1; p < f.size(); ++p) {
        auto& out = Q[t][p].part(d);
        std::fill(out.begin(), out.end(), Complex{});
        const BivariateSeries& prev = p == 1 ? ssm.X[static_cast<std::size_t>(slot[f[0]])] : Q[t][p - 1];
        accumulate_product_part(prev, ssm.X[static_cast<std::size_t>(slot[f[p]])], d,
                                static_cast<unsigned>(p), 1, out);
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      G[i].assign(d + 1, Complex{});
      for (std::size_t t = 0; t < nmon; ++t) {
        const Complex b = mm.Gm_coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        if (b == Complex{} || factors[t].size() > d) continue;
        const auto& mu = factors[t].size() == 1 ? ssm.X[static_cast<std::size_t>(slot[factors[t][0]])].part(d)
                                                : Q[t].back().part(d);
        for (unsigned j = 0; j <= d; ++j) G[i][j] += b * mu[j];
      }
    }

    for (std::size_t i = 0; i < N; ++i) {
      const Complex li = mm.lambda[static_cast<Eigen::Index>(i)];
      for (unsigned j = 0; j <= d; ++j) {
        const unsigned a = d - j, b = j;
        // sum over reduced rows v of d/ds_v W_i times the nonlinear part of R_v
        Complex cross{};
        for (unsigned v = 0; v < 2; ++v) {
          for (unsigned q = 3; q + 1 <= d; q += 2) {
            const unsigned hi = (q + 1) / 2, lo = (q - 1) / 2;
            const unsigned ra = v == 0 ? hi : lo, rb = v == 0 ? lo : hi;
            const Complex rc = ssm.R[v].at(ra, rb);
            if (rc == Complex{}) continue;
            // w = e - r + e_v
            const long wa = static_cast<long>(a) - ra + (v == 0), wb = static_cast<long>(b) - rb + (v == 1);
            if (wa < 0 || wb < 0 || wa + wb < 2) continue;
            const long mult = v == 0 ? wa : wb;
            if (mult == 0) continue;
            cross += static_cast<double>(mult) * ssm.W[i].at(static_cast<unsigned>(wa), static_cast<unsigned>(wb)) * rc;
          }
        }
        const Complex den = li - static_cast<double>(a) * l1 - static_cast<double>(b) * l2;
        if (i < 2 && detail::auto_resonant(i, a, b)) {
          ssm.R[i].at(a, b) = G[i][j] - cross;
          ssm.W[i].at(a, b) = 0.0;
        } else {
          if (std::abs(den) < resonance_tol * std::abs(li)) {
            std::ostringstream os;
            os << "internal resonance at row " << i + 1 << ", multi-index (" << a << "," << b
               << "): |lambda_i - <m, lambda>| = " << std::abs(den);
            throw Error(ErrorKind::internal_resonance, os.str());
          }
          ssm.W[i].at(a, b) = (cross - G[i][j]) / den;
        }
      }
    }
    update_x(d);
  }

  for (unsigned jj = 1; 2 * jj + 1 <= order; ++jj) ssm.gamma.push_back(ssm.R[0].at(jj + 1, jj));
  return ssm;
}

// Residual of Lambda W0 + G_m(W0) - D_s W0 R0 at s, relative to |Lambda W0(s)|.
inline double invariance_residual_at(const AutonomousSsm& ssm, const ModalModel& mm, Complex s1, Complex s2) {
  const std::size_t N = mm.dim();
  VectorXcd w(static_cast<Eigen::Index>(N)), dw1(static_cast<Eigen::Index>(N)), dw2(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    w[ii] = ssm.W[i].evaluate(s1, s2);
    dw1[ii] = ssm.W[i].evaluate_diff(s1, s2, 0);
    dw2[ii] = ssm.W[i].evaluate_diff(s1, s2, 1);
  }
  const Complex r1 = ssm.R[0].evaluate(s1, s2), r2 = ssm.R[1].evaluate(s1, s2);
  const VectorXcd lw = mm.lambda.cwiseProduct(w);
  const VectorXcd res = lw + mm.Gm(w) - dw1 * r1 - dw2 * r2;
  return res.norm() / lw.norm();
}

// Maximum relative residual over the given sample points.
inline double invariance_residual(const AutonomousSsm& ssm, const ModalModel& mm,
                                  const std::vector<std::array<Complex, 2>>& samples) {
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, invariance_residual_at(ssm, mm, s[0], s[1]));
  return worst;
}

// Points with |s1| = |s2| = r and uniformly random phases.
inline std::vector<std::array<Complex, 2>> polydisk_samples(double r, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::array<Complex, 2>> out(count);
  for (auto& s : out) s = {std::polar(r, phase(rng)), std::polar(r, phase(rng))};
  return out;
}

// Least-squares slope of log(residual) against log(radius). Points at or below
// the roundoff floor carry no truncation information and are skipped.
inline constexpr double kResidualRoundoffFloor = 1e-13;

inline double loglog_slope(const std::vector<double>& radius, const std::vector<double>& residual,
                           double floor = kResidualRoundoffFloor) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < radius.size() && k < residual.size(); ++k)
    if (residual[k] > floor && radius[k] > 0.0) {
      x.push_back(std::log(radius[k]));
      y.push_back(std::log(residual[k]));
    }
  if (x.size() < 3) throw Error(ErrorKind::insufficient_data, "slope fit needs three residuals above roundoff");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

// Radii spaced logarithmically over [r_min, r_max].
inline std::vector<double> log_radii(double r_min, double r_max, std::size_t count) {
  std::vector<double> r(count);
  for (std::size_t k = 0; k < count; ++k)
    r[k] = r_min * std::pow(r_max / r_min, static_cast<double>(k) / static_cast<double>(count - 1));
  return r;
}

// a(rho) = Re(lambda_1) rho + sum Re(gamma_i) rho^(2i+1), coefficients of rho^(2i+1).
inline std::vector<double> a_coefficients(const AutonomousSsm& ssm, unsigned half_order) {
  std::vector<double> a{ssm.lambda1.real()};
  for (unsigned i = 0; i < half_order && i < ssm.gamma.size(); ++i) a.push_back(ssm.gamma[i].real());
  return a;
}

}  // namespace ssmr
