#pragma once

// Truncated multivariate polynomials with complex coefficients.
//
// MultiPoly is the general sparse form keyed by multi-index in graded-lex
// order. BivariateSeries is the dense form in two variables used by the
// manifold solvers, where everything is organized by homogeneous degree.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "ssmr/errors.hpp"

namespace ssmr {

using Complex = std::complex<double>;
using MultiIndex = boost::container::small_vector<unsigned, 4>;

inline unsigned degree(const MultiIndex& m) {
  return std::accumulate(m.begin(), m.end(), 0u);
}

// Degree ascending, then exponents lexicographically descending, so for two
// variables the order is 1, s1, s2, s1^2, s1 s2, s2^2, ...
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const unsigned da = degree(a), db = degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

inline constexpr double kDropTolerance = 1e-14;

class MultiPoly {
 public:
  using Terms = std::map<MultiIndex, Complex, GradedLexLess>;

  MultiPoly() = default;
  MultiPoly(std::size_t num_vars, unsigned trunc_order)
      : num_vars_(num_vars), trunc_order_(trunc_order) {
    if (num_vars == 0) throw Error(ErrorKind::invalid_input, "polynomial needs at least one variable");
  }

  static MultiPoly constant(std::size_t num_vars, unsigned trunc_order, Complex c) {
    MultiPoly p(num_vars, trunc_order);
    p.add_term(MultiIndex(num_vars, 0u), c);
    return p;
  }

  static MultiPoly variable(std::size_t num_vars, unsigned trunc_order, std::size_t var,
                            Complex c = 1.0) {
    if (var >= num_vars) throw Error(ErrorKind::invalid_input, "variable index out of range");
    MultiIndex m(num_vars, 0u);
    m[var] = 1;
    MultiPoly p(num_vars, trunc_order);
    p.add_term(m, c);
    return p;
  }

  std::size_t num_vars() const { return num_vars_; }
  unsigned trunc_order() const { return trunc_order_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  Complex coeff(const MultiIndex& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Complex{} : it->second;
  }

  // Accumulates c into the coefficient of m; terms above the cap are dropped.
  void add_term(const MultiIndex& m, Complex c) {
    if (m.size() != num_vars_) throw Error(ErrorKind::invalid_input, "multi-index length mismatch");
    if (degree(m) > trunc_order_ || c == Complex{}) return;
    terms_[m] += c;
  }

  void set_term(const MultiIndex& m, Complex c) {
    if (m.size() != num_vars_) throw Error(ErrorKind::invalid_input, "multi-index length mismatch");
    if (degree(m) > trunc_order_) return;
    if (c == Complex{}) terms_.erase(m);
    else terms_[m] = c;
  }

  // Removes coefficients at or below the drop tolerance relative to the largest.
  void prune() {
    double big = 0.0;
    for (const auto& [m, c] : terms_) big = std::max(big, std::abs(c));
    const double cut = kDropTolerance * big;
    std::erase_if(terms_, [cut](const auto& kv) { return std::abs(kv.second) <= cut; });
  }

  unsigned max_degree() const { return terms_.empty() ? 0 : degree(terms_.rbegin()->first); }

  Complex evaluate(std::span<const Complex> x) const {
    if (x.size() != num_vars_) throw Error(ErrorKind::invalid_input, "evaluation point dimension mismatch");
    Complex sum{};
    for (const auto& [m, c] : terms_) {
      Complex t = c;
      for (std::size_t v = 0; v < num_vars_; ++v)
        for (unsigned e = 0; e < m[v]; ++e) t *= x[v];
      sum += t;
    }
    return sum;
  }

  friend bool operator==(const MultiPoly&, const MultiPoly&) = default;

 private:
  std::size_t num_vars_ = 1;
  unsigned trunc_order_ = 0;
  Terms terms_;
};

namespace detail {
inline void require_compatible(const MultiPoly& p, const MultiPoly& q) {
  if (p.num_vars() != q.num_vars() || p.trunc_order() != q.trunc_order())
    throw Error(ErrorKind::invalid_input, "polynomial dimension mismatch");
}
}  // namespace detail

inline MultiPoly poly_add(const MultiPoly& p, const MultiPoly& q) {
  detail::require_compatible(p, q);
  MultiPoly r = p;
  for (const auto& [m, c] : q.terms()) r.add_term(m, c);
  r.prune();
  return r;
}

inline MultiPoly poly_scale(const MultiPoly& p, Complex s) {
  MultiPoly r(p.num_vars(), p.trunc_order());
  for (const auto& [m, c] : p.terms()) r.add_term(m, s * c);
  r.prune();
  return r;
}

inline MultiPoly poly_sub(const MultiPoly& p, const MultiPoly& q) {
  return poly_add(p, poly_scale(q, -1.0));
}

inline MultiPoly poly_mul(const MultiPoly& p, const MultiPoly& q) {
  detail::require_compatible(p, q);
  MultiPoly r(p.num_vars(), p.trunc_order());
  MultiIndex e(p.num_vars(), 0u);
  for (const auto& [a, x] : p.terms()) {
    const unsigned da = degree(a);
    for (const auto& [b, y] : q.terms()) {
      if (da + degree(b) > p.trunc_order()) break;  // q is degree-sorted
      for (std::size_t v = 0; v < e.size(); ++v) e[v] = a[v] + b[v];
      r.add_term(e, x * y);
    }
  }
  r.prune();
  return r;
}

inline MultiPoly poly_pow(const MultiPoly& p, unsigned k) {
  MultiPoly r = MultiPoly::constant(p.num_vars(), p.trunc_order(), 1.0);
  MultiPoly base = p;
  while (k > 0) {
    if (k & 1u) r = poly_mul(r, base);
    k >>= 1;
    if (k > 0) base = poly_mul(base, base);
  }
  return r;
}

inline MultiPoly poly_diff(const MultiPoly& p, std::size_t var) {
  if (var >= p.num_vars()) throw Error(ErrorKind::invalid_input, "derivative variable out of range");
  MultiPoly r(p.num_vars(), p.trunc_order());
  for (const auto& [m, c] : p.terms()) {
    if (m[var] == 0) continue;
    MultiIndex e = m;
    --e[var];
    r.add_term(e, static_cast<double>(m[var]) * c);
  }
  r.prune();
  return r;
}

// coeff * prod_i w[i]^term[i]; a term whose degree exceeds the cap of w yields zero.
inline MultiPoly poly_substitute(const MultiIndex& term, Complex coeff, std::span<const MultiPoly> w) {
  if (w.empty() || term.size() != w.size())
    throw Error(ErrorKind::invalid_input, "substitution arity mismatch");
  const std::size_t nv = w[0].num_vars();
  const unsigned order = w[0].trunc_order();
  for (const auto& wi : w)
    if (wi.num_vars() != nv || wi.trunc_order() != order)
      throw Error(ErrorKind::invalid_input, "substitution operands disagree in shape");
  MultiPoly r = MultiPoly::constant(nv, order, coeff);
  if (degree(term) > order) return MultiPoly(nv, order);
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (term[i] == 0) continue;
    r = poly_mul(r, poly_pow(w[i], term[i]));
    if (r.is_zero()) break;
  }
  return r;
}

inline MultiPoly homogeneous_part(const MultiPoly& p, unsigned d) {
  MultiPoly r(p.num_vars(), p.trunc_order());
  for (const auto& [m, c] : p.terms())
    if (degree(m) == d) r.add_term(m, c);
  return r;
}

inline MultiPoly truncated(const MultiPoly& p, unsigned order) {
  MultiPoly r(p.num_vars(), order);
  for (const auto& [m, c] : p.terms()) r.add_term(m, c);
  return r;
}

inline MultiPoly conj(const MultiPoly& p) {
  MultiPoly r(p.num_vars(), p.trunc_order());
  for (const auto& [m, c] : p.terms()) r.add_term(m, std::conj(c));
  return r;
}

inline std::string format_index(const MultiIndex& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(m[i]);
  }
  return s + ")";
}

// Dense power series in (s1, s2) stored by homogeneous degree:
// part(d)[j] is the coefficient of s1^(d-j) s2^j, which is graded-lex order.
class BivariateSeries {
 public:
  BivariateSeries() = default;
  explicit BivariateSeries(unsigned order) : parts_(order + 1) {
    for (unsigned d = 0; d <= order; ++d) parts_[d].assign(d + 1, Complex{});
  }

  unsigned order() const { return parts_.empty() ? 0 : static_cast<unsigned>(parts_.size() - 1); }
  std::vector<Complex>& part(unsigned d) { return parts_[d]; }
  const std::vector<Complex>& part(unsigned d) const { return parts_[d]; }

  // Coefficient of s1^a s2^b.
  Complex& at(unsigned a, unsigned b) { return parts_[a + b][b]; }
  Complex at(unsigned a, unsigned b) const {
    return a + b < parts_.size() ? parts_[a + b][b] : Complex{};
  }

  Complex evaluate(Complex s1, Complex s2) const {
    Complex sum{};
    for (unsigned d = parts_.size(); d-- > 0;) {
      Complex h{};
      for (unsigned j = 0; j <= d; ++j)
        h += parts_[d][j] * std::pow(s1, static_cast<int>(d - j)) * std::pow(s2, static_cast<int>(j));
      sum += h;
    }
    return sum;
  }

  // Value at s1 = rho e^{i theta}, s2 = rho e^{-i theta}.
  Complex evaluate_polar(double rho, double theta) const {
    Complex sum{};
    double rd = 1.0;
    for (unsigned d = 0; d < parts_.size(); ++d, rd *= rho) {
      Complex h{};
      for (unsigned j = 0; j <= d; ++j)
        if (parts_[d][j] != Complex{}) h += parts_[d][j] * std::polar(1.0, (static_cast<double>(d) - 2.0 * j) * theta);
      sum += rd * h;
    }
    return sum;
  }

  // Partial derivative with respect to s1 (var = 0) or s2 (var = 1).
  Complex evaluate_diff(Complex s1, Complex s2, int var) const {
    Complex sum{};
    for (unsigned d = 1; d < parts_.size(); ++d)
      for (unsigned j = 0; j <= d; ++j) {
        const int a = static_cast<int>(d - j), b = static_cast<int>(j);
        if (var == 0 && a > 0)
          sum += parts_[d][j] * static_cast<double>(a) * std::pow(s1, a - 1) * std::pow(s2, b);
        if (var == 1 && b > 0)
          sum += parts_[d][j] * static_cast<double>(b) * std::pow(s1, a) * std::pow(s2, b - 1);
      }
    return sum;
  }

  MultiPoly to_multipoly() const {
    MultiPoly p(2, order());
    for (unsigned d = 0; d < parts_.size(); ++d)
      for (unsigned j = 0; j <= d; ++j) p.add_term(MultiIndex{d - j, j}, parts_[d][j]);
    p.prune();
    return p;
  }

  static BivariateSeries from_multipoly(const MultiPoly& p) {
    if (p.num_vars() != 2) throw Error(ErrorKind::invalid_input, "bivariate series needs two variables");
    BivariateSeries s(p.trunc_order());
    for (const auto& [m, c] : p.terms()) s.at(m[0], m[1]) = c;
    return s;
  }

 private:
  std::vector<std::vector<Complex>> parts_;
};

// Degree-d homogeneous part of p*q using parts p[dp], q[d-dp] for dp in [lo_p, d - lo_q].
inline void accumulate_product_part(const BivariateSeries& p, const BivariateSeries& q, unsigned d,
                                    unsigned lo_p, unsigned lo_q, std::vector<Complex>& out) {
  if (d < lo_p + lo_q) return;
  for (unsigned dp = lo_p; dp + lo_q <= d; ++dp) {
    if (dp > p.order() || d - dp > q.order()) continue;
    const auto& a = p.part(dp);
    const auto& b = q.part(d - dp);
    for (unsigned i = 0; i <= dp; ++i) {
      if (a[i] == Complex{}) continue;
      for (unsigned j = 0; j <= d - dp; ++j) out[i + j] += a[i] * b[j];
    }
  }
}

}  // namespace ssmr
