#pragma once

// O(eps) part of the time-periodic manifold. With W1 = A(s) e^{i phi} + B(s) e^{-i phi}
// the two harmonics decouple and each coefficient solves
//   (lambda_i - <k, lambda> -+ i Omega) A_{i,k} = delta_{i,master} C_{i,k} + alpha_{i,k}.
// Resonant (row, k, harmonic) combinations are moved into the reduced dynamics.

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <vector>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"
#include "ssmr/polyalg.hpp"
#include "ssmr/ssm_auto.hpp"

namespace ssmr {

enum class Harmonic { plus, minus };

// Structural resonance pattern for the reduced rows.
inline bool forced_resonant(std::size_t row, unsigned k1, unsigned k2, Harmonic h) {
  if (h == Harmonic::plus) return (row == 0 && k1 == k2) || (row == 1 && k1 + 2 == k2);
  return (row == 0 && k1 == k2 + 2) || (row == 1 && k1 == k2);
}

struct DenominatorInfo {
  double magnitude = std::numeric_limits<double>::infinity();
  std::size_t row = 0;
  unsigned k1 = 0, k2 = 0;
  Harmonic harmonic = Harmonic::plus;
};

struct ForcedReduction {
  double omega = 0.0;
  unsigned order = 3;     // expansion order 2M+1; W1 holds |k| <= order - 1
  Complex c00;
  std::vector<Complex> c_ii;  // c_{1,(i,i)}, i = 1..M
  std::vector<Complex> d_pm;  // d_{1,(i+1,i-1)}, i = 1..M
  std::vector<BivariateSeries> W1_plus, W1_minus;
  std::array<BivariateSeries, 2> R1_plus, R1_minus;
  DenominatorInfo min_denominator;  // over coefficients kept in W1
};

inline Complex leading_forcing_coefficient(const ModalModel& mm) { return 0.5 * mm.Fm[0]; }

inline constexpr double kNearResonanceAbsTol = 1e-8;

namespace detail {

inline BivariateSeries series_mul(const BivariateSeries& p, const BivariateSeries& q, unsigned order) {
  BivariateSeries r(order);
  for (unsigned d = 0; d <= order; ++d) accumulate_product_part(p, q, d, 0, 0, r.part(d));
  return r;
}

}  // namespace detail

// Omega-independent data for the forced solve plus a per-Omega cache.
class ForcedSolver {
 public:
  ForcedSolver(std::shared_ptr<const ModalModel> mm, std::shared_ptr<const AutonomousSsm> ssm, unsigned order,
               double near_resonance_tol = kNearResonanceAbsTol)
      : mm_(std::move(mm)), ssm_(std::move(ssm)), order_(order), near_tol_(near_resonance_tol) {
    if (order_ < 1 || order_ % 2 == 0) throw Error(ErrorKind::invalid_input, "forced order must be odd");
    if (ssm_->order < order_) throw Error(ErrorKind::invalid_input, "autonomous manifold computed to lower order");
    const unsigned K = order_ - 1;
    // dmu[t][k] = d mu_t / d x_{phys k} evaluated on X(s), truncated at degree K.
    const std::size_t nmon = mm_->monomials.size();
    const std::size_t np = ssm_->physical_vars.size();
    dmu_.assign(nmon, std::vector<BivariateSeries>(np));
    for (std::size_t t = 0; t < nmon; ++t) {
      const MultiIndex& m = mm_->monomials[t];
      for (std::size_t k = 0; k < np; ++k) {
        const std::size_t var = ssm_->physical_vars[k];
        if (m[var] == 0) {
          dmu_[t][k] = BivariateSeries(K);
          continue;
        }
        BivariateSeries prod(K);
        prod.at(0, 0) = static_cast<double>(m[var]);
        for (std::size_t kk = 0; kk < np; ++kk) {
          const std::size_t v = ssm_->physical_vars[kk];
          const unsigned e = m[v] - (v == var ? 1u : 0u);
          for (unsigned r = 0; r < e; ++r) prod = detail::series_mul(prod, truncate_series(ssm_->X[kk], K), K);
        }
        dmu_[t][k] = std::move(prod);
      }
    }
  }

  const ModalModel& modal() const { return *mm_; }
  const AutonomousSsm& autonomous() const { return *ssm_; }
  unsigned order() const { return order_; }

  std::shared_ptr<const ForcedReduction> at(double omega) const {
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(omega);
      if (it != cache_.end()) return it->second;
    }
    auto fr = std::make_shared<const ForcedReduction>(solve(omega));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = cache_.emplace(omega, fr);
    if (cache_.size() > kCacheLimit) {
      cache_.clear();
      cache_.emplace(omega, fr);
      return fr;
    }
    return it->second;
  }

  ForcedReduction solve(double omega) const;

 private:
  static constexpr std::size_t kCacheLimit = 1 << 16;

  static BivariateSeries truncate_series(const BivariateSeries& s, unsigned K) {
    BivariateSeries r(K);
    for (unsigned d = 0; d <= std::min(K, s.order()); ++d) r.part(d) = s.part(d);
    return r;
  }

  void solve_harmonic(double omega, Harmonic h, std::vector<BivariateSeries>& A,
                      std::array<BivariateSeries, 2>& C, DenominatorInfo& dmin) const;

  std::shared_ptr<const ModalModel> mm_;
  std::shared_ptr<const AutonomousSsm> ssm_;
  unsigned order_;
  double near_tol_;
  std::vector<std::vector<BivariateSeries>> dmu_;
  mutable std::shared_mutex mutex_;
  mutable std::map<double, std::shared_ptr<const ForcedReduction>> cache_;
};

inline void ForcedSolver::solve_harmonic(double omega, Harmonic h, std::vector<BivariateSeries>& A,
                                         std::array<BivariateSeries, 2>& C, DenominatorInfo& dmin) const {
  const ModalModel& mm = *mm_;
  const AutonomousSsm& ssm = *ssm_;
  const unsigned K = order_ - 1;
  const std::size_t N = mm.dim();
  const std::size_t np = ssm.physical_vars.size();
  const Complex l1 = mm.lambda[0], l2 = mm.lambda[1];
  const Complex shift = (h == Harmonic::plus ? 1.0 : -1.0) * Complex(0.0, omega);

  A.assign(N, BivariateSeries(K));
  C = {BivariateSeries(K), BivariateSeries(K)};
  std::vector<BivariateSeries> Y(np, BivariateSeries(K));
  // Nonzero reduced coefficients found so far: (row, k1, k2).
  std::vector<std::array<unsigned, 3>> c_entries;

  std::vector<Complex> dg;
  for (unsigned d = 0; d <= K; ++d) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      // [D G_m(W0) W1]_i at degree d
      dg.assign(d + 1, Complex{});
      for (std::size_t t = 0; t < dmu_.size(); ++t) {
        const Complex b = mm.Gm_coeffs(ii, static_cast<Eigen::Index>(t));
        if (b == Complex{}) continue;
        std::vector<Complex> acc(d + 1, Complex{});
        for (std::size_t k = 0; k < np; ++k) accumulate_product_part(dmu_[t][k], Y[k], d, 1, 0, acc);
        for (unsigned j = 0; j <= d; ++j) dg[j] += b * acc[j];
      }
      const Complex li = mm.lambda[ii];
      for (unsigned j = 0; j <= d; ++j) {
        const unsigned a = d - j, b = j;
        Complex alpha = -dg[j];
        if (d == 0) alpha -= 0.5 * mm.Fm[ii];
        // D_s W0 (nonlinear part) times R1
        for (const auto& [v, ra, rb] : c_entries) {
          const long wa = static_cast<long>(a) - ra + (v == 0), wb = static_cast<long>(b) - rb + (v == 1);
          if (wa < 0 || wb < 0 || wa + wb < 2) continue;
          const long mult = v == 0 ? wa : wb;
          if (mult == 0) continue;
          alpha += static_cast<double>(mult) *
                   ssm.W[i].at(static_cast<unsigned>(wa), static_cast<unsigned>(wb)) * C[v].at(ra, rb);
        }
        // D_s W1 times the nonlinear part of R0
        for (unsigned v = 0; v < 2; ++v)
          for (unsigned q = 3; q <= d + 1; q += 2) {
            const unsigned hi = (q + 1) / 2, lo = (q - 1) / 2;
            const unsigned ra = v == 0 ? hi : lo, rb = v == 0 ? lo : hi;
            const Complex rc = ssm.R[v].at(ra, rb);
            if (rc == Complex{}) continue;
            const long wa = static_cast<long>(a) - ra + (v == 0), wb = static_cast<long>(b) - rb + (v == 1);
            if (wa < 0 || wb < 0) continue;
            const long mult = v == 0 ? wa : wb;
            if (mult == 0) continue;
            alpha += static_cast<double>(mult) * A[i].at(static_cast<unsigned>(wa), static_cast<unsigned>(wb)) * rc;
          }
        const Complex den = li - static_cast<double>(a) * l1 - static_cast<double>(b) * l2 - shift;
        if (i < 2 && forced_resonant(i, a, b, h)) {
          C[i].at(a, b) = -alpha;
          if (alpha != Complex{}) c_entries.push_back({static_cast<unsigned>(i), a, b});
          continue;
        }
        if (std::abs(den) < near_tol_) {
          std::ostringstream os;
          os << "near resonance in the forced manifold at row " << i + 1 << ", k = (" << a << "," << b << "), "
             << (h == Harmonic::plus ? "e^{+i phi}" : "e^{-i phi}") << " harmonic: |denominator| = " << std::abs(den);
          throw Error(ErrorKind::near_resonance, os.str());
        }
        if (std::abs(den) < dmin.magnitude) dmin = {std::abs(den), i, a, b, h};
        A[i].at(a, b) = alpha / den;
      }
    }
    for (std::size_t k = 0; k < np; ++k) {
      auto& part = Y[k].part(d);
      const auto row = static_cast<Eigen::Index>(ssm.physical_vars[k]);
      for (std::size_t i = 0; i < N; ++i) {
        const Complex t = mm.T(row, static_cast<Eigen::Index>(i));
        for (unsigned j = 0; j <= d; ++j) part[j] += t * A[i].part(d)[j];
      }
    }
  }
}

inline ForcedReduction ForcedSolver::solve(double omega) const {
  if (!(omega > 0.0)) throw Error(ErrorKind::invalid_input, "forcing frequency must be positive");
  ForcedReduction fr;
  fr.omega = omega;
  fr.order = order_;
  solve_harmonic(omega, Harmonic::plus, fr.W1_plus, fr.R1_plus, fr.min_denominator);
  solve_harmonic(omega, Harmonic::minus, fr.W1_minus, fr.R1_minus, fr.min_denominator);
  fr.c00 = fr.R1_plus[0].at(0, 0);
  for (unsigned i = 1; 2 * i + 1 <= order_; ++i) {
    fr.c_ii.push_back(fr.R1_plus[0].at(i, i));
    fr.d_pm.push_back(fr.R1_minus[0].at(i + 1, i - 1));
  }
  return fr;
}

inline ForcedReduction compute_nonautonomous_ssm(const AutonomousSsm& ssm, const ModalModel& mm, double omega,
                                                 unsigned order) {
  ForcedSolver solver(std::make_shared<const ModalModel>(mm), std::make_shared<const AutonomousSsm>(ssm), order);
  return solver.solve(omega);
}

// Residual of the O(eps) invariance equation at (s, phi), relative to
// |Lambda W1| + |F_m cos phi|.
inline double forced_invariance_residual_at(const AutonomousSsm& ssm, const ForcedReduction& fr,
                                            const ModalModel& mm, Complex s1, Complex s2, double phi) {
  const std::size_t N = mm.dim();
  const auto NN = static_cast<Eigen::Index>(N);
  const Complex ep = std::polar(1.0, phi), em = std::conj(ep);
  VectorXcd w0(NN), w1(NN), w1_phi(NN), dw0_1(NN), dw0_2(NN), dw1_1(NN), dw1_2(NN);
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    w0[ii] = ssm.W[i].evaluate(s1, s2);
    dw0_1[ii] = ssm.W[i].evaluate_diff(s1, s2, 0);
    dw0_2[ii] = ssm.W[i].evaluate_diff(s1, s2, 1);
    const Complex ap = fr.W1_plus[i].evaluate(s1, s2), am = fr.W1_minus[i].evaluate(s1, s2);
    w1[ii] = ap * ep + am * em;
    w1_phi[ii] = Complex(0, 1) * (ap * ep - am * em);
    dw1_1[ii] = fr.W1_plus[i].evaluate_diff(s1, s2, 0) * ep + fr.W1_minus[i].evaluate_diff(s1, s2, 0) * em;
    dw1_2[ii] = fr.W1_plus[i].evaluate_diff(s1, s2, 1) * ep + fr.W1_minus[i].evaluate_diff(s1, s2, 1) * em;
  }
  const Complex r0_1 = ssm.R[0].evaluate(s1, s2), r0_2 = ssm.R[1].evaluate(s1, s2);
  const Complex r1_1 = fr.R1_plus[0].evaluate(s1, s2) * ep + fr.R1_minus[0].evaluate(s1, s2) * em;
  const Complex r1_2 = fr.R1_plus[1].evaluate(s1, s2) * ep + fr.R1_minus[1].evaluate(s1, s2) * em;

  // D G_m(W0) W1 = B_m sum_k d mu / d x_k (T W0) (T W1)_k
  const VectorXcd x = mm.T * w0, y = mm.T * w1;
  VectorXcd dmu = VectorXcd::Zero(static_cast<Eigen::Index>(mm.monomials.size()));
  for (std::size_t t = 0; t < mm.monomials.size(); ++t) {
    const MultiIndex& m = mm.monomials[t];
    for (std::size_t var = 0; var < m.size(); ++var) {
      if (m[var] == 0) continue;
      Complex v = static_cast<double>(m[var]);
      for (std::size_t u = 0; u < m.size(); ++u) {
        const unsigned e = m[u] - (u == var ? 1u : 0u);
        for (unsigned r = 0; r < e; ++r) v *= x[static_cast<Eigen::Index>(u)];
      }
      dmu[static_cast<Eigen::Index>(t)] += v * y[static_cast<Eigen::Index>(var)];
    }
  }
  const VectorXcd dgw1 = mm.monomials.empty() ? VectorXcd::Zero(NN) : VectorXcd(mm.Gm_coeffs * dmu);
  const VectorXcd forcing = mm.Fm * std::cos(phi);
  const VectorXcd lw1 = mm.lambda.cwiseProduct(w1);
  const VectorXcd res = lw1 + dgw1 + forcing - dw0_1 * r1_1 - dw0_2 * r1_2 - dw1_1 * r0_1 - dw1_2 * r0_2 -
                        w1_phi * fr.omega;
  return res.norm() / (lw1.norm() + forcing.norm());
}

}  // namespace ssmr
