#pragma once

// Forced response curve as the zero set of G(rho; Omega), swept over a rho grid.
// At each rho the half-angle quadratic gives psi on the K+ and K- branches and
// G = 0 is solved for Omega near the backbone b(rho).

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "ssmr/errors.hpp"
#include "ssmr/reduced.hpp"

namespace ssmr {

enum class Branch { plus, minus };

inline const char* to_string(Branch b) { return b == Branch::plus ? "K+" : "K-"; }

struct KRoot {
  Branch branch = Branch::plus;
  double K = 0.0;  // +-inf encodes psi = pi
  double psi = 0.0;
};

inline constexpr double kDegenerateLeadingTol = 1e-14;

inline double wrap_angle(double psi) {
  const double two_pi = 2.0 * std::numbers::pi;
  psi = std::fmod(psi, two_pi);
  if (psi < 0.0) psi += two_pi;
  if (psi >= two_pi) psi = 0.0;
  return psi;
}

inline double half_angle(double K) { return std::isinf(K) ? std::numbers::pi : wrap_angle(2.0 * std::atan(K)); }

// Real roots of (a - eps f1) K^2 + 2 eps f2 K + (a + eps f1) = 0, labelled
// K+- = (-B +- sqrt(D)) / A and evaluated without cancellation.
inline std::vector<KRoot> k_branches(double a, double f1, double f2, double eps) {
  const double A = a - eps * f1, B = eps * f2, C = a + eps * f1;
  const double D = B * B - A * C;
  if (D < 0.0) return {};
  const double sq = std::sqrt(D);
  double kp, km;
  if (std::abs(A) < kDegenerateLeadingTol) {
    if (B == 0.0) return {{Branch::plus, std::numeric_limits<double>::infinity(), std::numbers::pi}};
    const double finite = -C / (2.0 * B);
    const double inf = std::numeric_limits<double>::infinity();
    kp = B > 0 ? finite : inf;
    km = B > 0 ? inf : finite;
  } else if (B >= 0.0) {
    const double q = -B - sq;
    kp = q != 0.0 ? C / q : 0.0;
    km = q / A;
  } else {
    const double q = -B + sq;
    kp = q / A;
    km = C / q;
  }
  return {{Branch::plus, kp, half_angle(kp)}, {Branch::minus, km, half_angle(km)}};
}

inline std::vector<KRoot> k_branches(const ReducedDynamics& rd, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::invalid_input, "k_branches needs rho > 0");
  return k_branches(rd.a(rho), rd.F1(rho), rd.F2(rho), rd.eps);
}

inline std::optional<KRoot> pick(const std::vector<KRoot>& roots, Branch b) {
  for (const auto& r : roots)
    if (r.branch == b) return r;
  return std::nullopt;
}

// G(rho; Omega) on a branch; nullopt when the branch does not exist at rho.
inline std::optional<double> frc_G(const ReducedDynamics& rd, double rho, double omega, Branch branch) {
  const auto root = pick(k_branches(rd, rho), branch);
  if (!root) return std::nullopt;
  const double K = root->K;
  double c, s;
  if (std::isinf(K)) {
    c = -1.0;
    s = 0.0;
  } else {
    c = (1 - K * K) / (1 + K * K);
    s = 2 * K / (1 + K * K);
  }
  return (rd.b(rho) - omega) * rho + rd.eps * (rd.G1(rho) * c - rd.G2(rho) * s);
}

struct FrcOptions {
  double eps = 0.0;
  double rho_max = 1.0;
  std::size_t n_rho = 2000;
  double omega_min = -std::numeric_limits<double>::infinity();
  double omega_max = std::numeric_limits<double>::infinity();
  unsigned jobs = 1;
  int max_iterations = 50;
  double g_tol = 1e-12;
  double residual_tol = 1e-10;
  std::size_t gap_steps = 2;  // grid steps bridged within one branch segment
  std::optional<std::size_t> monitor;  // displacement coordinate for amplitudes
  std::size_t n_phi = 256;
  double fold_tol = kFoldDegenerateTol;
};

struct FrcPoint {
  double rho = 0.0, omega = 0.0, psi = 0.0;
  Branch branch = Branch::plus;
  Stability stability = Stability::stable;
  Stability stability_fd = Stability::stable;
  double residual = 0.0;
  double amplitude = std::numeric_limits<double>::quiet_NaN();
  std::size_t grid_index = 0;
  int component = -1;
};

struct FoldPoint {
  double rho = 0.0, omega = 0.0, psi = 0.0;
  double discriminant = 0.0;
  int component = -1;
};

struct FrcCurve {
  double eps = 0.0;
  std::vector<FrcPoint> points;
  std::vector<FoldPoint> folds;
  std::size_t num_components = 0;
  std::vector<std::string> log;
};

// Maximum |x_coord| over one forcing period on the reconstructed orbit.
class AmplitudeEvaluator {
 public:
  AmplitudeEvaluator(const ReducedModel& model, std::size_t coord, std::size_t n_phi = 256)
      : model_(&model), coord_(coord), n_phi_(std::max<std::size_t>(n_phi, 256)) {
    if (coord >= model.modal().dim()) throw Error(ErrorKind::invalid_input, "coordinate index out of range");
    x0_ = physical_series(model.autonomous().W, model.modal(), coord);
  }

  double operator()(double rho, double psi, double omega, double eps) const {
    BivariateSeries yp, ym;
    if (eps != 0.0) {
      const auto fr = model_->forced().at(omega);
      yp = physical_series(fr->W1_plus, model_->modal(), coord_);
      ym = physical_series(fr->W1_minus, model_->modal(), coord_);
    }
    auto value = [&](double phi) {
      const double theta = psi + phi;
      Complex x = x0_.evaluate_polar(rho, theta);
      if (eps != 0.0)
        x += eps * (yp.evaluate_polar(rho, theta) * std::polar(1.0, phi) +
                    ym.evaluate_polar(rho, theta) * std::polar(1.0, -phi));
      return std::abs(x.real());
    };
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n_phi_);
    double best = 0.0, arg = 0.0;
    for (std::size_t j = 0; j < n_phi_; ++j) {
      const double v = value(step * static_cast<double>(j));
      if (v > best) best = v, arg = step * static_cast<double>(j);
    }
    // Polish the sampled maximum within one grid step on either side.
    const auto r = boost::math::tools::brent_find_minima([&](double phi) { return -value(phi); }, arg - step,
                                                         arg + step, std::numeric_limits<double>::digits / 2);
    return std::max(best, -r.second);
  }

 private:
  const ReducedModel* model_;
  std::size_t coord_;
  std::size_t n_phi_;
  BivariateSeries x0_;
};

inline double physical_amplitude(const ReducedModel& model, double rho, double psi, double omega, double eps,
                                 std::size_t coord, std::size_t n_phi = 256) {
  return AmplitudeEvaluator(model, coord, n_phi)(rho, psi, omega, eps);
}

namespace detail {

struct BranchSolve {
  bool ok = false;
  double omega = 0.0, psi = 0.0;
  std::string failure;
};

// Solves G(rho; Omega) = 0 on one branch, seeded at the backbone.
inline BranchSolve solve_branch(const ReducedModel& model, double rho, Branch branch, const FrcOptions& opt) {
  BranchSolve out;
  const double eps = opt.eps;
  if (!model.omega_dependent()) {
    const ReducedDynamics rd = model.at(model.autonomous().lambda1.imag(), eps);
    const auto root = pick(k_branches(rd, rho), branch);
    if (!root) return out;
    const double c = std::cos(root->psi), s = std::sin(root->psi);
    out.omega = rd.b(rho) + eps * (rd.G1(rho) * c - rd.G2(rho) * s) / rho;
    out.psi = root->psi;
    out.ok = true;
    return out;
  }
  const ReducedDynamics rd0 = model.at(model.autonomous().lambda1.imag(), eps);
  double omega = rd0.b(rho);
  if (!(omega > 0.0)) omega = model.autonomous().lambda1.imag();
  auto G = [&](double w) -> std::optional<double> {
    if (!(w > 0.0)) return std::nullopt;
    try {
      return frc_G(model.at(w, eps), rho, w, branch);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::near_resonance) throw;
      return std::nullopt;
    }
  };
  auto g = G(omega);
  if (!g) return out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (std::abs(*g) <= opt.g_tol) break;
    const double h = 1e-7 * std::max(1.0, std::abs(omega));
    const auto gp = G(omega + h), gm = G(omega - h);
    double slope = -rho;
    if (gp && gm) slope = (*gp - *gm) / (2 * h);
    if (slope == 0.0 || !std::isfinite(slope)) {
      out.failure = "flat G";
      return out;
    }
    double step = -*g / slope;
    std::optional<double> next;
    for (int halve = 0; halve < 30; ++halve) {
      next = G(omega + step);
      if (next && std::abs(*next) < std::abs(*g)) break;
      step *= 0.5;
    }
    if (!next) {
      out.failure = "branch vanished during the frequency iteration";
      return out;
    }
    omega += step;
    g = next;
  }
  if (!(std::abs(*g) <= opt.g_tol)) {
    out.failure = "frequency iteration did not converge";
    return out;
  }
  const auto root = pick(k_branches(model.at(omega, eps), rho), branch);
  if (!root) return out;
  out.omega = omega;
  out.psi = root->psi;
  out.ok = true;
  return out;
}

// Newton refinement of (Omega, psi) on the full zero problem at fixed rho.
inline double refine_point(const ReducedModel& model, double rho, double eps, double& omega, double& psi,
                           double tol) {
  auto F = [&](double w, double p) { return zero_problem(model.at(w, eps), rho, w, p); };
  Eigen::Vector2d r = F(omega, psi);
  for (int it = 0; it < 8 && r.norm() > tol; ++it) {
    const double hw = 1e-7 * std::max(1.0, std::abs(omega)), hp = 1e-7;
    Eigen::Matrix2d J;
    J.col(0) = (F(omega + hw, psi) - F(omega - hw, psi)) / (2 * hw);
    J.col(1) = (F(omega, psi + hp) - F(omega, psi - hp)) / (2 * hp);
    const Eigen::Vector2d step = J.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    const Eigen::Vector2d trial = F(omega + step[0], psi + step[1]);
    if (trial.norm() >= r.norm()) break;
    omega += step[0];
    psi += step[1];
    r = trial;
  }
  psi = wrap_angle(psi);
  return r.norm();
}

// Omega at which the double root sits, for a given rho.
inline double fold_omega(const ReducedModel& model, double rho, double eps, double& psi) {
  double omega = model.autonomous().lambda1.imag();
  for (int it = 0; it < 60; ++it) {
    const ReducedDynamics rd = model.at(omega, eps);
    const double A = rd.a(rho) - eps * rd.F1(rho), B = eps * rd.F2(rho);
    const double K = A != 0.0 ? -B / A : std::numeric_limits<double>::infinity();
    psi = half_angle(K);
    const double next = rd.b(rho) + eps * (rd.G1(rho) * std::cos(psi) - rd.G2(rho) * std::sin(psi)) / rho;
    if (!model.omega_dependent() || std::abs(next - omega) <= 1e-14 * std::max(1.0, std::abs(omega))) {
      omega = next;
      break;
    }
    omega = next;
  }
  return omega;
}

inline double fold_discriminant(const ReducedModel& model, double rho, double eps) {
  double psi = 0.0;
  const double omega = fold_omega(model, rho, eps, psi);
  return model.at(omega, eps).discriminant(rho);
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex m;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += jobs) fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline FrcCurve trace_frc(const ReducedModel& model, const FrcOptions& opt) {
  if (!(opt.eps > 0.0)) throw Error(ErrorKind::invalid_input, "forcing amplitude must be positive");
  if (!(opt.rho_max > 0.0) || opt.n_rho < 2) throw Error(ErrorKind::invalid_input, "invalid amplitude grid");
  const std::size_t n = opt.n_rho;
  const double eps = opt.eps;
  auto rho_at = [&](std::size_t j) { return opt.rho_max * static_cast<double>(j + 1) / static_cast<double>(n); };

  struct Slot {
    std::optional<FrcPoint> pt[2];
    std::string note;
  };
  std::vector<Slot> slots(n);
  std::optional<AmplitudeEvaluator> amp;
  if (opt.monitor) amp.emplace(model, *opt.monitor, opt.n_phi);

  detail::parallel_for(n, opt.jobs, [&](std::size_t j) {
    const double rho = rho_at(j);
    for (int bi = 0; bi < 2; ++bi) {
      const Branch br = bi == 0 ? Branch::plus : Branch::minus;
      auto sol = detail::solve_branch(model, rho, br, opt);
      if (!sol.ok) {
        if (!sol.failure.empty()) {
          std::ostringstream os;
          os << "rho = " << rho << ", " << to_string(br) << ": " << sol.failure << "; point skipped";
          slots[j].note += os.str();
        }
        continue;
      }
      FrcPoint p;
      p.rho = rho;
      p.branch = br;
      p.grid_index = j;
      p.omega = sol.omega;
      p.psi = sol.psi;
      p.residual = detail::refine_point(model, rho, eps, p.omega, p.psi, opt.residual_tol);
      const ReducedDynamics rd = model.at(p.omega, eps);
      p.stability = fixed_point_stability(rd, rho, p.psi, opt.fold_tol).stability;
      p.stability_fd = classify(polar_jacobian_fd(rd, rho, p.psi), opt.fold_tol);
      if (amp) p.amplitude = (*amp)(rho, p.psi, p.omega, eps);
      slots[j].pt[bi] = p;
    }
  });

  FrcCurve curve;
  curve.eps = eps;
  for (const auto& s : slots)
    if (!s.note.empty()) curve.log.push_back(s.note);

  // Segments: maximal runs of one branch with gaps of at most gap_steps grid steps.
  struct Segment {
    int branch;
    std::size_t first, last;
  };
  std::vector<Segment> segs;
  for (int bi = 0; bi < 2; ++bi) {
    std::optional<std::size_t> start, prev;
    for (std::size_t j = 0; j < n; ++j) {
      if (!slots[j].pt[bi]) continue;
      if (prev && j - *prev > opt.gap_steps) {
        segs.push_back({bi, *start, *prev});
        start.reset();
      }
      if (!start) start = j;
      prev = j;
    }
    if (start) segs.push_back({bi, *start, *prev});
  }

  // K+ and K- segments of one admissible interval share their fold ends.
  detail::UnionFind uf(segs.size());
  for (std::size_t p = 0; p < segs.size(); ++p)
    for (std::size_t q = p + 1; q < segs.size(); ++q) {
      if (segs[p].branch == segs[q].branch) continue;
      const auto near = [&](std::size_t x, std::size_t y) { return (x > y ? x - y : y - x) <= opt.gap_steps; };
      const bool lower = near(segs[p].first, segs[q].first);
      const bool upper = near(segs[p].last, segs[q].last) && segs[p].last + 1 < n && segs[q].last + 1 < n;
      if (lower || upper) uf.join(p, q);
    }

  std::vector<std::size_t> roots;
  std::vector<double> min_rho;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::size_t r = uf.find(s);
    auto it = std::find(roots.begin(), roots.end(), r);
    const double lo = rho_at(segs[s].first);
    if (it == roots.end()) {
      roots.push_back(r);
      min_rho.push_back(lo);
    } else {
      auto& m = min_rho[static_cast<std::size_t>(it - roots.begin())];
      m = std::min(m, lo);
    }
  }
  std::vector<std::size_t> order(roots.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return min_rho[x] < min_rho[y]; });
  std::vector<int> comp_of_root(roots.size());
  for (std::size_t k = 0; k < order.size(); ++k) comp_of_root[order[k]] = static_cast<int>(k);
  auto component_of = [&](std::size_t seg) {
    const std::size_t r = uf.find(seg);
    return comp_of_root[static_cast<std::size_t>(std::find(roots.begin(), roots.end(), r) - roots.begin())];
  };
  curve.num_components = roots.size();

  for (std::size_t s = 0; s < segs.size(); ++s) {
    const int c = component_of(s);
    for (std::size_t j = segs[s].first; j <= segs[s].last; ++j) {
      auto& pt = slots[j].pt[segs[s].branch];
      if (!pt) continue;
      pt->component = c;
    }
  }

  // Folds: sign changes of branch existence between neighbouring grid points,
  // located by bisection on the discriminant.
  auto exists = [&](std::size_t j) { return slots[j].pt[0].has_value() || slots[j].pt[1].has_value(); };
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (exists(j) == exists(j + 1)) continue;
    double lo = rho_at(j), hi = rho_at(j + 1);
    double dlo = detail::fold_discriminant(model, lo, eps);
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double dm = detail::fold_discriminant(model, mid, eps);
      if ((dm >= 0) == (dlo >= 0)) {
        lo = mid;
        dlo = dm;
      } else {
        hi = mid;
      }
    }
    FoldPoint f;
    f.rho = exists(j) ? lo : hi;
    f.omega = detail::fold_omega(model, f.rho, eps, f.psi);
    f.discriminant = model.at(f.omega, eps).discriminant(f.rho);
    const std::size_t side = exists(j) ? j : j + 1;
    for (int bi = 0; bi < 2; ++bi)
      if (slots[side].pt[bi]) f.component = slots[side].pt[bi]->component;
    curve.folds.push_back(f);
  }

  for (int bi = 0; bi < 2; ++bi)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& pt = slots[j].pt[bi];
      if (!pt || pt->omega < opt.omega_min || pt->omega > opt.omega_max) continue;
      curve.points.push_back(*pt);
    }
  std::stable_sort(curve.points.begin(), curve.points.end(), [](const FrcPoint& x, const FrcPoint& y) {
    if (x.component != y.component) return x.component < y.component;
    if (x.branch != y.branch) return x.branch == Branch::plus;
    return x.rho < y.rho;
  });
  return curve;
}

}  // namespace ssmr
