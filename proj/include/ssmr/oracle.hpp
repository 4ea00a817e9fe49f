#pragma once

// Brute-force reference: time integration of the full first-order system,
// steady-state frequency sweeps and the closed-form linear response.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numeric>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "ssmr/errors.hpp"
#include "ssmr/frc.hpp"
#include "ssmr/model.hpp"
#include "ssmr/ssm_auto.hpp"
#include "ssmr/ssm_forced.hpp"

namespace ssmr {

using State = std::vector<double>;

struct IntegrationOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t samples_per_period = 200;
  // Explicit stepping is refused when the stability bound alone needs more steps than this.
  double max_steps = 5e7;
  double min_step = 1e-12;
  // State norm treated as finite-time blow-up rather than stiffness.
  double blowup_norm = 1e6;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<VectorXd> x;
  std::size_t steps = 0;
};

// x' = A x + G(x) + eps F cos(Omega t)
class ForcedField {
 public:
  ForcedField(const FirstOrderSystem& fos, double eps, double omega) : fos_(&fos), eps_(eps), omega_(omega) {}
  void operator()(const State& x, State& dx, double t) const {
    const auto d = static_cast<Eigen::Index>(x.size());
    Eigen::Map<const VectorXd> xv(x.data(), d);
    dx.resize(x.size());
    Eigen::Map<VectorXd> dv(dx.data(), d);
    dv.noalias() = fos_->A * xv;
    if (!fos_->Gp.monomials.empty()) dv += fos_->Gp.evaluate_real(xv);
    if (eps_ != 0.0) dv += eps_ * std::cos(omega_ * t) * fos_->Fp;
  }

 private:
  const FirstOrderSystem* fos_;
  double eps_, omega_;
};

inline double spectral_radius(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

// dopri5's real stability interval is about 3.3 / |lambda|.
inline void check_explicit_cost(double rho_A, double t_span, const IntegrationOptions& opt) {
  const double needed = t_span * rho_A / 3.3;
  if (needed > opt.max_steps)
    throw Error(ErrorKind::stiffness,
                "explicit integration needs about " + std::to_string(static_cast<long long>(needed)) +
                    " steps (spectral radius " + std::to_string(rho_A) +
                    "); use the modal exponential integrator (--integrator etd)");
}

}  // namespace detail

// Embedded 4(5) dense-output integration sampled uniformly at T / samples_per_period.
inline Trajectory integrate_full(const FirstOrderSystem& fos, double eps, double omega, const VectorXd& x0,
                                 double t_end, const IntegrationOptions& opt = {}) {
  namespace ode = boost::numeric::odeint;
  if (static_cast<std::size_t>(x0.size()) != fos.dim()) throw Error(ErrorKind::invalid_input, "initial state size");
  if (!(t_end >= 0.0)) throw Error(ErrorKind::invalid_input, "t_end must be non-negative");
  if (opt.samples_per_period < 200) throw Error(ErrorKind::invalid_input, "at least 200 samples per period required");
  detail::check_explicit_cost(spectral_radius(fos.A), t_end, opt);
  const double period = omega > 0.0 ? 2.0 * std::numbers::pi / omega : t_end;
  const double dt_sample = period > 0.0 ? period / static_cast<double>(opt.samples_per_period) : 1.0;

  Trajectory tr;
  State x(x0.data(), x0.data() + x0.size());
  const ForcedField field(fos, eps, omega);
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(x, 0.0, std::min(dt_sample, 1e-2));
  auto push = [&](double t, const State& s) {
    tr.t.push_back(t);
    tr.x.push_back(Eigen::Map<const VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())));
  };
  push(0.0, x);
  const auto n_samples = static_cast<std::size_t>(std::floor(t_end / dt_sample + 1e-9));
  State buf(x.size());
  for (std::size_t k = 1; k <= n_samples; ++k) {
    const double ts = static_cast<double>(k) * dt_sample;
    while (stepper.current_time() < ts) {
      stepper.do_step(field);
      ++tr.steps;
      if (stepper.current_time_step() < opt.min_step)
        throw Error(ErrorKind::stiffness, "step size underflow at t = " + std::to_string(stepper.current_time()));
      if (static_cast<double>(tr.steps) > opt.max_steps)
        throw Error(ErrorKind::stiffness, "step budget exhausted at t = " + std::to_string(stepper.current_time()));
    }
    stepper.calc_state(ts, buf);
    push(ts, buf);
  }
  return tr;
}

// Propagates one forcing period at a time; implementations share the steady-state driver.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual void reset(const VectorXd& x0) = 0;
  // Advances one period from a period boundary; fills samples[c][j] for each monitored coordinate.
  virtual void advance_period(std::vector<std::vector<double>>& samples) = 0;
  virtual VectorXd state() const = 0;
};

class RkPropagator final : public Propagator {
 public:
  RkPropagator(const FirstOrderSystem& fos, double eps, double omega, std::vector<std::size_t> monitor,
               const IntegrationOptions& opt)
      : fos_(&fos), field_(fos, eps, omega), monitor_(std::move(monitor)), opt_(opt),
        period_(2.0 * std::numbers::pi / omega) {}

  void reset(const VectorXd& x0) override {
    x_.assign(x0.data(), x0.data() + x0.size());
    t_ = 0.0;
  }

  void advance_period(std::vector<std::vector<double>>& samples) override {
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_dense_output(opt_.abs_tol, opt_.rel_tol, ode::runge_kutta_dopri5<State>());
    stepper.initialize(x_, t_, period_ / static_cast<double>(opt_.samples_per_period));
    samples.assign(monitor_.size(), {});
    State buf(x_.size());
    const double t0 = t_;
    const double start_norm = std::sqrt(std::inner_product(x_.begin(), x_.end(), x_.begin(), 0.0));
    std::size_t steps = 0;
    for (std::size_t k = 1; k <= opt_.samples_per_period; ++k) {
      const double ts = t0 + period_ * static_cast<double>(k) / static_cast<double>(opt_.samples_per_period);
      while (stepper.current_time() < ts) {
        stepper.do_step(field_);
        const State& xc = stepper.current_state();
        const double norm = std::sqrt(std::inner_product(xc.begin(), xc.end(), xc.begin(), 0.0));
        const bool collapsed = stepper.current_time_step() < opt_.min_step || ++steps > opt_.max_steps;
        // Step collapse with a hundredfold growth inside one period is finite-time blow-up, not stiffness.
        const bool grew = norm > 100.0 * std::max(start_norm, 1e-300);
        if (!std::isfinite(norm) || norm > opt_.blowup_norm || (collapsed && grew)) {
          // Report infinite amplitude for the rest of the period.
          for (auto& s : samples) s.resize(opt_.samples_per_period, std::numeric_limits<double>::infinity());
          x_.assign(x_.size(), std::numeric_limits<double>::infinity());
          t_ = t0 + period_;
          return;
        }
        if (collapsed) throw Error(ErrorKind::stiffness, "explicit step size collapsed");
      }
      stepper.calc_state(ts, buf);
      for (std::size_t c = 0; c < monitor_.size(); ++c) samples[c].push_back(buf[monitor_[c]]);
    }
    x_ = buf;
    t_ = t0 + period_;
  }

  VectorXd state() const override { return Eigen::Map<const VectorXd>(x_.data(), static_cast<Eigen::Index>(x_.size())); }

 private:
  const FirstOrderSystem* fos_;
  ForcedField field_;
  std::vector<std::size_t> monitor_;
  IntegrationOptions opt_;
  double period_;
  State x_;
  double t_ = 0.0;
};

// Fourth-order exponential time differencing in modal coordinates q = T^-1 x.
// The diagonal linear part is propagated exactly, which removes the stiffness
// of fast, heavily damped modes.
class EtdPropagator final : public Propagator {
 public:
  EtdPropagator(const ModalModel& mm, double eps, double omega, std::vector<std::size_t> monitor,
                std::size_t steps_per_period)
      : mm_(&mm), eps_(eps), omega_(omega), monitor_(std::move(monitor)), steps_(steps_per_period) {
    if (steps_ < 200) throw Error(ErrorKind::invalid_input, "at least 200 steps per period required");
    h_ = 2.0 * std::numbers::pi / omega / static_cast<double>(steps_);
    const auto d = mm.lambda.size();
    E_.resize(d);
    E2_.resize(d);
    Q_.resize(d);
    f1_.resize(d);
    f2_.resize(d);
    f3_.resize(d);
    constexpr int kContour = 32;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Complex z = h_ * mm.lambda[i];
      E_[i] = std::exp(z);
      E2_[i] = std::exp(0.5 * z);
      Complex q = 0.0, a = 0.0, b = 0.0, c = 0.0;
      for (int k = 0; k < kContour; ++k) {
        const Complex r = z + std::polar(1.0, std::numbers::pi * (k + 0.5) / kContour * 2.0);
        const Complex er = std::exp(r), r3 = r * r * r;
        q += (std::exp(0.5 * r) - 1.0) / r;
        a += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
        b += (2.0 + r + er * (r - 2.0)) / r3;
        c += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
      }
      Q_[i] = h_ * q / double(kContour);
      f1_[i] = h_ * a / double(kContour);
      f2_[i] = h_ * b / double(kContour);
      f3_[i] = h_ * c / double(kContour);
    }
    rows_vars_.resize(static_cast<Eigen::Index>(mm.physical_vars.size()), d);
    for (std::size_t k = 0; k < mm.physical_vars.size(); ++k)
      rows_vars_.row(static_cast<Eigen::Index>(k)) = mm.T.row(static_cast<Eigen::Index>(mm.physical_vars[k]));
    rows_mon_.resize(static_cast<Eigen::Index>(monitor_.size()), d);
    for (std::size_t k = 0; k < monitor_.size(); ++k)
      rows_mon_.row(static_cast<Eigen::Index>(k)) = mm.T.row(static_cast<Eigen::Index>(monitor_[k]));
    // Monomials re-expressed over the compact list of used variables.
    for (const auto& m : mm.monomials) {
      std::vector<std::size_t> f;
      for (std::size_t k = 0; k < mm.physical_vars.size(); ++k)
        for (unsigned e = 0; e < m[mm.physical_vars[k]]; ++e) f.push_back(k);
      factors_.push_back(std::move(f));
    }
  }

  void reset(const VectorXd& x0) override {
    q_ = mm_->T_inv * x0.cast<Complex>();
    t_ = 0.0;
  }

  void advance_period(std::vector<std::vector<double>>& samples) override {
    samples.assign(monitor_.size(), {});
    const double t0 = t_;
    for (std::size_t k = 0; k < steps_; ++k) {
      step(t0 + static_cast<double>(k) * h_);
      const VectorXcd y = rows_mon_ * q_;
      for (std::size_t c = 0; c < monitor_.size(); ++c) samples[c].push_back(y[static_cast<Eigen::Index>(c)].real());
    }
    t_ = t0 + static_cast<double>(steps_) * h_;
  }

  VectorXd state() const override { return (mm_->T * q_).real(); }

 private:
  VectorXcd nonlinear(const VectorXcd& q, double t) const {
    VectorXcd out = VectorXcd::Zero(q.size());
    if (!factors_.empty()) {
      const VectorXd x = (rows_vars_ * q).real();
      VectorXcd mu(static_cast<Eigen::Index>(factors_.size()));
      for (std::size_t m = 0; m < factors_.size(); ++m) {
        double v = 1.0;
        for (std::size_t f : factors_[m]) v *= x[static_cast<Eigen::Index>(f)];
        mu[static_cast<Eigen::Index>(m)] = v;
      }
      out.noalias() = mm_->Gm_coeffs * mu;
    }
    if (eps_ != 0.0) out += (eps_ * std::cos(omega_ * t)) * mm_->Fm;
    return out;
  }

  void step(double t) {
    const VectorXcd Nu = nonlinear(q_, t);
    const VectorXcd a = E2_.cwiseProduct(q_) + Q_.cwiseProduct(Nu);
    const VectorXcd Na = nonlinear(a, t + 0.5 * h_);
    const VectorXcd b = E2_.cwiseProduct(q_) + Q_.cwiseProduct(Na);
    const VectorXcd Nb = nonlinear(b, t + 0.5 * h_);
    const VectorXcd c = E2_.cwiseProduct(a) + Q_.cwiseProduct(2.0 * Nb - Nu);
    const VectorXcd Nc = nonlinear(c, t + h_);
    q_ = E_.cwiseProduct(q_) + f1_.cwiseProduct(Nu) + 2.0 * f2_.cwiseProduct(Na + Nb) + f3_.cwiseProduct(Nc);
  }

  const ModalModel* mm_;
  double eps_, omega_;
  std::vector<std::size_t> monitor_;
  std::size_t steps_;
  double h_ = 0.0;
  VectorXcd E_, E2_, Q_, f1_, f2_, f3_;
  MatrixXcd rows_vars_, rows_mon_;
  std::vector<std::vector<std::size_t>> factors_;
  VectorXcd q_;
  double t_ = 0.0;
};

enum class Integrator { rk45, etd, automatic };

inline Integrator parse_integrator(const std::string& s) {
  if (s == "rk45") return Integrator::rk45;
  if (s == "etd") return Integrator::etd;
  if (s == "auto") return Integrator::automatic;
  throw Error(ErrorKind::invalid_input, "unknown integrator '" + s + "' (rk45, etd, auto)");
}

inline const char* to_string(Integrator i) {
  switch (i) {
    case Integrator::rk45: return "rk45";
    case Integrator::etd: return "etd";
    case Integrator::automatic: return "auto";
  }
  return "?";
}

struct SweepOptions {
  double eps = 0.0;
  std::vector<double> omegas;
  std::vector<std::size_t> monitor;
  bool warm_start = false;
  bool sweep_down = false;
  double transient_factor = 5.0;  // transient = factor / |Re lambda_1|
  std::size_t min_periods = 20;
  std::size_t max_periods = 400;
  double steady_tol = 1e-3;
  std::size_t steady_count = 3;
  double divergence_bound = 1e6;
  Integrator integrator = Integrator::automatic;
  IntegrationOptions integration;
  unsigned jobs = 1;
};

struct SweepRecord {
  double omega = 0.0;
  std::vector<double> amplitude;  // max |x_c| over the last simulated period
  bool converged = false;
  bool diverged = false;
  std::size_t periods = 0;
  double last_change = std::numeric_limits<double>::infinity();
};

struct SweepResult {
  std::vector<SweepRecord> records;
  Integrator integrator_used = Integrator::rk45;
};

struct SteadyState {
  SweepRecord record;
  VectorXd final_state;
};

inline double period_amplitude(const std::vector<double>& s) {
  double m = 0.0;
  for (double v : s) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(v));
  }
  return m;
}

namespace detail {

// Remaining relative drift if the last changes decay geometrically; slow decay
// near folds keeps this large even when single-period changes are small.
inline double tail_drift(const std::vector<double>& changes, std::size_t count) {
  if (changes.size() < count + 1) return std::numeric_limits<double>::infinity();
  const double last = changes.back();
  if (last <= 1e-12) return last;
  double log_ratio = 0.0;
  for (std::size_t k = changes.size() - count; k < changes.size(); ++k) {
    if (changes[k - 1] <= 0.0) return last;
    log_ratio += std::log(std::max(changes[k], 1e-300) / changes[k - 1]);
  }
  const double r = std::exp(log_ratio / static_cast<double>(count));
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return last * r / (1.0 - r);
}

}  // namespace detail

// Transient of transient_factor / |Re lambda_1|, then at least min_periods measured
// periods until the first monitored amplitude changes by less than steady_tol for
// steady_count consecutive periods and the extrapolated remaining drift is
// below steady_tol as well.
inline SteadyState run_to_steady_state(Propagator& prop, const VectorXd& x0, double omega, double re_lambda1,
                                       const SweepOptions& opt) {
  SteadyState out;
  out.record.omega = omega;
  prop.reset(x0);
  const double period = 2.0 * std::numbers::pi / omega;
  const auto transient = static_cast<std::size_t>(std::ceil(opt.transient_factor / std::abs(re_lambda1) / period));
  std::vector<std::vector<double>> samples;
  auto blown = [&](const std::vector<std::vector<double>>& s) {
    for (const auto& c : s) {
      const double a = period_amplitude(c);
      if (!std::isfinite(a) || a > opt.divergence_bound) return true;
    }
    return false;
  };
  for (std::size_t k = 0; k < transient; ++k) {
    prop.advance_period(samples);
    ++out.record.periods;
    if (blown(samples)) {
      out.record.diverged = true;
      break;
    }
  }
  double prev = std::numeric_limits<double>::quiet_NaN();
  std::size_t calm = 0, measured = 0;
  std::vector<double> changes;
  while (!out.record.diverged && measured < opt.max_periods) {
    prop.advance_period(samples);
    ++out.record.periods;
    ++measured;
    if (blown(samples)) {
      out.record.diverged = true;
      break;
    }
    const double a = period_amplitude(samples.front());
    if (std::isfinite(prev)) {
      out.record.last_change = std::abs(a - prev) / std::max(std::abs(a), std::numeric_limits<double>::min());
      calm = out.record.last_change < opt.steady_tol ? calm + 1 : 0;
      changes.push_back(out.record.last_change);
    }
    prev = a;
    if (measured >= opt.min_periods && calm >= opt.steady_count &&
        detail::tail_drift(changes, opt.steady_count) < opt.steady_tol) {
      out.record.converged = true;
      break;
    }
  }
  out.record.amplitude.clear();
  for (const auto& c : samples) out.record.amplitude.push_back(period_amplitude(c));
  out.final_state = prop.state();
  return out;
}

inline Integrator resolve_integrator(const ModalModel& mm, const SweepOptions& opt) {
  if (opt.integrator != Integrator::automatic) return opt.integrator;
  if (opt.omegas.empty()) return Integrator::rk45;
  const double period = 2.0 * std::numbers::pi / *std::min_element(opt.omegas.begin(), opt.omegas.end());
  const double horizon =
      opt.transient_factor / std::abs(mm.lambda1().real()) + static_cast<double>(opt.max_periods) * period;
  const double needed = horizon * mm.lambda.cwiseAbs().maxCoeff() / 3.3;
  return needed > opt.integration.max_steps ? Integrator::etd : Integrator::rk45;
}

inline SweepResult sweep(const ModalModel& mm, const SweepOptions& opt) {
  if (opt.omegas.empty()) throw Error(ErrorKind::invalid_input, "empty frequency grid");
  if (!std::is_sorted(opt.omegas.begin(), opt.omegas.end()))
    throw Error(ErrorKind::invalid_input, "frequency grid must be sorted ascending");
  if (opt.omegas.front() <= 0.0) throw Error(ErrorKind::invalid_input, "frequencies must be positive");
  if (opt.eps < 0.0) throw Error(ErrorKind::invalid_input, "eps must be non-negative");
  std::vector<std::size_t> monitor = opt.monitor.empty() ? std::vector<std::size_t>{mm.monitor} : opt.monitor;
  for (std::size_t c : monitor)
    if (c >= mm.dim()) throw Error(ErrorKind::invalid_input, "monitored coordinate out of range");
  SweepResult res;
  res.integrator_used = resolve_integrator(mm, opt);
  if (res.integrator_used == Integrator::rk45) {
    const double period = 2.0 * std::numbers::pi / opt.omegas.front();
    detail::check_explicit_cost(spectral_radius(mm.fos.A),
                                opt.transient_factor / std::abs(mm.lambda1().real()) +
                                    static_cast<double>(opt.max_periods) * period,
                                opt.integration);
  }
  auto make = [&](double omega) -> std::unique_ptr<Propagator> {
    if (res.integrator_used == Integrator::etd)
      return std::make_unique<EtdPropagator>(mm, opt.eps, omega, monitor, opt.integration.samples_per_period);
    IntegrationOptions io = opt.integration;
    io.blowup_norm = std::min(io.blowup_norm, opt.divergence_bound);
    return std::make_unique<RkPropagator>(mm.fos, opt.eps, omega, monitor, io);
  };
  const std::size_t n = opt.omegas.size();
  res.records.resize(n);
  const VectorXd zero = VectorXd::Zero(static_cast<Eigen::Index>(mm.dim()));
  const double re1 = mm.lambda1().real();
  if (opt.warm_start) {
    VectorXd x = zero;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = opt.sweep_down ? n - 1 - k : k;
      auto prop = make(opt.omegas[j]);
      auto ss = run_to_steady_state(*prop, x, opt.omegas[j], re1, opt);
      res.records[j] = ss.record;
      x = ss.record.diverged ? zero : ss.final_state;
    }
  } else {
    detail::parallel_for(n, opt.jobs, [&](std::size_t j) {
      auto prop = make(opt.omegas[j]);
      res.records[j] = run_to_steady_state(*prop, zero, opt.omegas[j], re1, opt).record;
    });
  }
  return res;
}

// Amplitude of the linear reduced response: eps |c| / |lambda_1 - i Omega|.
inline double linear_frc_closed_form(const ModalModel& mm, double eps, double omega) {
  const Complex l = mm.lambda1();
  return eps * std::abs(leading_forcing_coefficient(mm)) / std::hypot(l.real(), l.imag() - omega);
}

// Full state on the time-periodic manifold at t = 0 for the reduced point (rho, psi).
inline VectorXd ssm_initial_condition(const ReducedModel& model, double rho, double psi, double omega, double eps) {
  const ModalModel& mm = model.modal();
  VectorXd x(static_cast<Eigen::Index>(mm.dim()));
  std::shared_ptr<const ForcedReduction> fr;
  if (eps != 0.0) fr = model.forced().at(omega);
  for (std::size_t k = 0; k < mm.dim(); ++k) {
    Complex v = physical_series(model.autonomous().W, mm, k).evaluate_polar(rho, psi);
    if (fr)
      v += eps * (physical_series(fr->W1_plus, mm, k).evaluate_polar(rho, psi) +
                  physical_series(fr->W1_minus, mm, k).evaluate_polar(rho, psi));
    x[static_cast<Eigen::Index>(k)] = v.real();
  }
  return x;
}

}  // namespace ssmr
