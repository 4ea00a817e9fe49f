#pragma once

// Mechanical system ingestion, first-order form and complex modal coordinates.
//
//   M y'' + C y' + K y + g(y, y') = eps f cos(Omega t)
//   x = (y, y'),  x' = A x + G_p(x) + eps F_p cos(Omega t)
//   x = T q,      q' = Lambda q + G_m(q) + eps F_m cos(Omega t)

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/errors.hpp"
#include "ssmr/polyalg.hpp"

namespace ssmr {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Normalization {
  first_position,  // first nonzero displacement entry equals one
  unit_norm,       // unit 2-norm, largest entry real and positive
};

inline const char* to_string(Normalization n) {
  return n == Normalization::first_position ? "first_position" : "unit_norm";
}

// One term coefficient * prod x^exponents acting on equation `dof` of g.
struct NonlinearTerm {
  std::size_t dof = 0;
  double coefficient = 0.0;
  MultiIndex exponents;
};

struct MechanicalSystem {
  std::string name;
  std::size_t n = 0;
  MatrixXd M, C, K;
  std::vector<NonlinearTerm> g;
  VectorXd f;
  Normalization normalization = Normalization::first_position;
  std::size_t monitor = 0;  // displacement coordinate reported as physical amplitude
};

inline void validate(const MechanicalSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.n);
  if (sys.n == 0) throw Error(ErrorKind::invalid_input, "system has no degrees of freedom");
  auto square = [n](const MatrixXd& X) { return X.rows() == n && X.cols() == n; };
  if (!square(sys.M) || !square(sys.C) || !square(sys.K))
    throw Error(ErrorKind::invalid_input, "M, C and K must be n x n");
  if (sys.f.size() != n) throw Error(ErrorKind::invalid_input, "forcing vector must have length n");
  auto symmetric = [](const MatrixXd& X) {
    return (X - X.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, X.cwiseAbs().maxCoeff());
  };
  if (!symmetric(sys.M)) throw Error(ErrorKind::invalid_input, "M is not symmetric");
  if (!symmetric(sys.C)) throw Error(ErrorKind::invalid_input, "C is not symmetric");
  if (!symmetric(sys.K)) throw Error(ErrorKind::invalid_input, "K is not symmetric");
  Eigen::LLT<MatrixXd> llt(sys.M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::invalid_input, "M is not positive definite");
  for (const auto& t : sys.g) {
    if (t.dof >= sys.n) throw Error(ErrorKind::invalid_input, "nonlinear term row out of range");
    if (t.exponents.size() != 2 * sys.n)
      throw Error(ErrorKind::invalid_input, "nonlinear term needs 2n exponents");
    if (degree(t.exponents) < 2)
      throw Error(ErrorKind::invalid_input, "nonlinear term of degree below two");
  }
  if (sys.monitor >= sys.n) throw Error(ErrorKind::invalid_input, "monitor index out of range");
}

// G(x) = coeffs * mu(x) with mu the list of distinct monomials.
template <typename Scalar>
struct PolynomialField {
  std::size_t num_vars = 0;
  std::vector<MultiIndex> monomials;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> coeffs;

  template <typename X>
  static VectorXcd monomial_values(const std::vector<MultiIndex>& mons, const X& x) {
    VectorXcd mu(static_cast<Eigen::Index>(mons.size()));
    for (std::size_t k = 0; k < mons.size(); ++k) {
      Complex v = 1.0;
      for (std::size_t j = 0; j < mons[k].size(); ++j)
        for (unsigned e = 0; e < mons[k][j]; ++e) v *= Complex(x[static_cast<Eigen::Index>(j)]);
      mu[static_cast<Eigen::Index>(k)] = v;
    }
    return mu;
  }

  VectorXcd evaluate(const VectorXcd& x) const {
    if (monomials.empty()) return VectorXcd::Zero(coeffs.rows());
    return coeffs.template cast<Complex>() * monomial_values(monomials, x);
  }

  // Real evaluation for real fields; used by the time integrators.
  VectorXd evaluate_real(const VectorXd& x) const {
    VectorXd out = VectorXd::Zero(coeffs.rows());
    for (std::size_t k = 0; k < monomials.size(); ++k) {
      double v = 1.0;
      for (std::size_t j = 0; j < monomials[k].size(); ++j)
        for (unsigned e = 0; e < monomials[k][j]; ++e) v *= x[static_cast<Eigen::Index>(j)];
      out += v * coeffs.col(static_cast<Eigen::Index>(k)).real();
    }
    return out;
  }

  // Variables with a nonzero exponent in some monomial.
  std::vector<std::size_t> used_vars() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < num_vars; ++j)
      if (std::any_of(monomials.begin(), monomials.end(), [j](const MultiIndex& m) { return m[j] > 0; }))
        out.push_back(j);
    return out;
  }
};

struct FirstOrderSystem {
  MatrixXd A;
  PolynomialField<double> Gp;
  VectorXd Fp;
  std::size_t n = 0;
  std::size_t monitor = 0;
  Normalization normalization = Normalization::first_position;

  std::size_t dim() const { return 2 * n; }
};

inline FirstOrderSystem to_first_order(const MechanicalSystem& sys) {
  validate(sys);
  const auto n = static_cast<Eigen::Index>(sys.n);
  Eigen::LLT<MatrixXd> llt(sys.M);
  const MatrixXd Minv = llt.solve(MatrixXd::Identity(n, n));

  FirstOrderSystem fos;
  fos.n = sys.n;
  fos.monitor = sys.monitor;
  fos.normalization = sys.normalization;
  fos.A = MatrixXd::Zero(2 * n, 2 * n);
  fos.A.topRightCorner(n, n).setIdentity();
  fos.A.bottomLeftCorner(n, n) = -Minv * sys.K;
  fos.A.bottomRightCorner(n, n) = -Minv * sys.C;

  std::map<MultiIndex, std::size_t, GradedLexLess> slot;
  for (const auto& t : sys.g)
    if (t.coefficient != 0.0 && !slot.count(t.exponents)) slot.emplace(t.exponents, slot.size());
  fos.Gp.num_vars = 2 * sys.n;
  fos.Gp.monomials.resize(slot.size());
  // Columns follow graded-lex order of the monomials.
  std::size_t col = 0;
  for (auto& [m, idx] : slot) {
    idx = col;
    fos.Gp.monomials[col++] = m;
  }
  fos.Gp.coeffs = MatrixXd::Zero(2 * n, static_cast<Eigen::Index>(slot.size()));
  for (const auto& t : sys.g) {
    if (t.coefficient == 0.0) continue;
    const auto c = static_cast<Eigen::Index>(slot.at(t.exponents));
    fos.Gp.coeffs.col(c).tail(n) -= t.coefficient * Minv.col(static_cast<Eigen::Index>(t.dof));
  }

  fos.Fp = VectorXd::Zero(2 * n);
  fos.Fp.tail(n) = Minv * sys.f;
  return fos;
}

struct ModalModel {
  std::size_t n = 0;
  VectorXcd lambda;  // master pair first (Im > 0 leading), then decreasing real part
  MatrixXcd T, T_inv;
  std::size_t mode = 1;  // 1-based index among complex pairs, slowest first
  std::vector<MultiIndex> monomials;
  MatrixXcd Gm_coeffs;  // T^-1 B
  VectorXcd Fm;         // T^-1 F_p
  std::vector<std::size_t> physical_vars;
  double cond_T = 1.0;
  Normalization normalization = Normalization::first_position;
  std::size_t monitor = 0;
  FirstOrderSystem fos;

  std::size_t dim() const { return 2 * n; }
  Complex lambda1() const { return lambda[0]; }

  // G_m(q) = T^-1 G_p(T q).
  VectorXcd Gm(const VectorXcd& q) const {
    if (monomials.empty()) return VectorXcd::Zero(lambda.size());
    const VectorXcd x = T * q;
    return Gm_coeffs * PolynomialField<Complex>::monomial_values(monomials, x);
  }
};

namespace detail {

inline void normalize_vector(Eigen::Ref<VectorXcd> v, std::size_t n, Normalization mode) {
  if (mode == Normalization::first_position) {
    const double big = v.head(static_cast<Eigen::Index>(n)).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
      if (std::abs(v[i]) > 1e-8 * big) {
        v /= v[i];
        return;
      }
    throw Error(ErrorKind::semisimplicity, "eigenvector with vanishing displacement part");
  }
  v /= v.norm();
  Eigen::Index j = 0;
  v.cwiseAbs().maxCoeff(&j);
  v *= std::abs(v[j]) / v[j];
}

}  // namespace detail

inline constexpr double kMaxEigenvectorCondition = 1e8;

// master: 1-based index of the complex pair, counted from the slowest decay.
inline ModalModel modal_decompose(const FirstOrderSystem& fos, std::size_t master = 1,
                                  double max_condition = kMaxEigenvectorCondition) {
  const auto N = static_cast<Eigen::Index>(fos.dim());
  Eigen::EigenSolver<MatrixXd> es(fos.A);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::semisimplicity, "eigensolver failed");
  const VectorXcd ev = es.eigenvalues();
  const MatrixXcd V = es.eigenvectors();

  // Blocks: conjugate pairs (Im > 0 representative) or single real eigenvalues.
  struct Block {
    Complex lam;
    VectorXcd vec;
    bool pair;
  };
  std::vector<Block> blocks;
  const double scale = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < N; ++i) {
    const Complex l = ev[i];
    if (std::abs(l.imag()) <= 1e-13 * std::max(1.0, scale)) {
      blocks.push_back({Complex(l.real(), 0.0), V.col(i).real().cast<Complex>(), false});
    } else if (l.imag() > 0) {
      blocks.push_back({l, V.col(i), true});
    }
  }
  std::size_t count = 0;
  for (const auto& b : blocks) count += b.pair ? 2 : 1;
  if (count != static_cast<std::size_t>(N))
    throw Error(ErrorKind::semisimplicity, "unpaired complex eigenvalues");

  for (const auto& b : blocks)
    if (b.lam.real() >= 0.0) {
      std::ostringstream os;
      os << "eigenvalue " << b.lam.real() << (b.lam.imag() >= 0 ? "+" : "") << b.lam.imag()
         << "i has non-negative real part; the origin is not asymptotically stable";
      throw Error(ErrorKind::unstable_origin, os.str());
    }

  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    if (a.lam.real() != b.lam.real()) return a.lam.real() > b.lam.real();
    return a.lam.imag() < b.lam.imag();
  });

  std::vector<std::size_t> pair_blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].pair) pair_blocks.push_back(i);
  if (master < 1 || master > pair_blocks.size()) {
    std::ostringstream os;
    os << "mode " << master << " requested but the system has " << pair_blocks.size()
       << " oscillatory mode pairs";
    throw Error(ErrorKind::invalid_input, os.str());
  }
  const std::size_t mb = pair_blocks[master - 1];

  ModalModel mm;
  mm.n = fos.n;
  mm.mode = master;
  mm.normalization = fos.normalization;
  mm.monitor = fos.monitor;
  mm.fos = fos;
  mm.lambda.resize(N);
  mm.T.resize(N, N);
  Eigen::Index col = 0;
  auto place = [&](const Block& b) {
    VectorXcd v = b.vec;
    detail::normalize_vector(v, fos.n, fos.normalization);
    if (!b.pair) v = v.real().cast<Complex>().eval();
    mm.lambda[col] = b.lam;
    mm.T.col(col++) = v;
    if (b.pair) {
      mm.lambda[col] = std::conj(b.lam);
      mm.T.col(col++) = v.conjugate();
    }
  };
  place(blocks[mb]);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (i != mb) place(blocks[i]);

  MatrixXcd Tn = mm.T;
  for (Eigen::Index j = 0; j < N; ++j) Tn.col(j).normalize();
  Eigen::JacobiSVD<MatrixXcd> svd(Tn);
  const auto& sv = svd.singularValues();
  mm.cond_T = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(mm.cond_T < max_condition)) {
    std::ostringstream os;
    os << "eigenvector matrix condition number " << mm.cond_T << " exceeds " << max_condition
       << "; A is treated as defective";
    throw Error(ErrorKind::semisimplicity, os.str());
  }
  mm.T_inv = mm.T.partialPivLu().inverse();

  mm.monomials = fos.Gp.monomials;
  mm.Gm_coeffs = mm.T_inv * fos.Gp.coeffs.cast<Complex>();
  mm.Fm = mm.T_inv * fos.Fp.cast<Complex>();
  mm.physical_vars = fos.Gp.used_vars();
  return mm;
}

// Int[min Re(lambda) / Re(lambda_1)].
inline long long spectral_quotient(const ModalModel& mm) {
  const double slow = mm.lambda[0].real();
  double fast = slow;
  for (Eigen::Index i = 0; i < mm.lambda.size(); ++i) fast = std::min(fast, mm.lambda[i].real());
  return static_cast<long long>(std::floor(fast / slow * (1.0 + 1e-12)));
}

struct ResonanceTriple {
  long long a = 0, b = 0;
  std::size_t l = 0;  // 1-based position in the sorted spectrum
  double margin = 0.0;
};

struct NonresonanceReport {
  bool pass = true;
  long long sigma = 2;
  std::vector<ResonanceTriple> violations;
  std::vector<ResonanceTriple> margins;  // closest real-part combination per enslaved mode
  double min_margin = std::numeric_limits<double>::infinity();
  // Closest combination (a - b) Im(lambda_1) to Im(lambda_l), reported but not enforced.
  std::vector<ResonanceTriple> imag_near;
};

inline constexpr double kNonresonanceRelTol = 1e-8;
inline constexpr double kImagNearRelTol = 1e-3;

inline NonresonanceReport check_nonresonance(const ModalModel& mm, long long sigma,
                                             double rel_tol = kNonresonanceRelTol) {
  if (sigma < 2) throw Error(ErrorKind::invalid_input, "non-resonance order must be at least 2");
  NonresonanceReport rep;
  rep.sigma = sigma;
  const double re1 = mm.lambda[0].real();
  const double im1 = mm.lambda[0].imag();
  for (Eigen::Index l = 2; l < mm.lambda.size(); ++l) {
    const double rel = mm.lambda[l].real();
    const double ratio = rel / re1;
    const long long s = std::clamp<long long>(std::llround(ratio), 2, sigma);
    const double margin = std::abs(static_cast<double>(s) * re1 - rel);
    ResonanceTriple t{s, 0, static_cast<std::size_t>(l + 1), margin};
    rep.margins.push_back(t);
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin <= rel_tol * std::abs(rel)) {
      rep.pass = false;
      rep.violations.push_back(t);
    }
    // Imaginary parts: (a - b) Im(lambda_1) with a + b <= sigma.
    const double iml = mm.lambda[l].imag();
    const long long reach = std::min<long long>(sigma, 1000000);
    const long long q = std::clamp<long long>(std::llround(iml / im1), -reach, reach);
    const double im_margin = std::abs(static_cast<double>(q) * im1 - iml);
    if (im_margin <= kImagNearRelTol * std::abs(im1)) {
      long long a = 0, b = 0;
      // Smallest a + b >= 2 with a - b = q.
      if (q >= 2) a = q;
      else if (q <= -2) b = -q;
      else if (q == 1) a = 2, b = 1;
      else if (q == -1) a = 1, b = 2;
      else a = 1, b = 1;
      if (a + b <= sigma) rep.imag_near.push_back({a, b, static_cast<std::size_t>(l + 1), im_margin});
    }
  }
  return rep;
}

inline std::string describe(const NonresonanceReport& rep) {
  std::ostringstream os;
  os.precision(6);
  for (const auto& t : rep.violations)
    os << "a*Re(lambda_1) + b*Re(lambda_2) = Re(lambda_l) for (a,b,l) = (" << t.a << "," << t.b << ","
       << t.l << "), margin " << t.margin << "\n";
  return os.str();
}

}  // namespace ssmr
