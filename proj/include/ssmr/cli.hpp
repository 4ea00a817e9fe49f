#pragma once

// Run orchestration behind the ssm-resolve command line: one RunConfig in,
// artifacts and an exit status out. Outputs are staged and committed only
// when the whole command succeeds.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ssmr/beam.hpp"
#include "ssmr/errors.hpp"
#include "ssmr/frc.hpp"
#include "ssmr/isola.hpp"
#include "ssmr/model.hpp"
#include "ssmr/oracle.hpp"
#include "ssmr/reduced.hpp"
#include "ssmr/report.hpp"
#include "ssmr/ssm_auto.hpp"
#include "ssmr/ssm_forced.hpp"
#include "ssmr/system_io.hpp"

namespace ssmr {

struct Tolerances {
  double nonresonance = kNonresonanceRelTol;
  double condition = kMaxEigenvectorCondition;
  double internal_resonance = kInternalResonanceRelTol;
  double near_resonance = kNearResonanceAbsTol;
  double fold = kFoldDegenerateTol;
  double g = 1e-12;
  double residual = 1e-10;
  double cauchy = 1e-3;
  double radius = 0.8;
  double steady = 1e-3;
  double rk_rel = 1e-10;
  double rk_abs = 1e-12;
};

struct RunConfig {
  std::string command;  // analyze | frc | isola | verify | beam
  std::string system;
  std::string params;
  std::size_t mode = 1;
  unsigned order = 3;
  std::optional<unsigned> forced_terms;  // default: all rho^(2i) corrections
  double eps = 0.0;
  double rho_max = 1.0;
  std::size_t n_rho = 2000;
  std::optional<double> omega_min, omega_max;
  std::string monitor = "tip";
  std::size_t n_phi = 256;
  std::string orders = "1..10";
  std::string omega_grid;
  std::string sweep = "up";  // up | down | none
  std::string integrator = "auto";
  double transient_factor = 5.0;
  std::size_t min_periods = 20;
  std::size_t max_periods = 400;
  double divergence_bound = 1e6;
  int elements = 0;  // 0: from the parameter file
  std::optional<long long> sigma;
  bool full_sigma = false;
  std::size_t samples = 64;
  double sample_radius = 1e-3;
  std::string out, svg, roots_svg, dump_ssm;
  Tolerances tol;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
  bool quiet = false;
};

// Every field that can change an artifact body, in a fixed order.
inline std::string canonical(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const auto& v) { os << k << "=" << v << "\n"; };
  auto opt = [&](const char* k, const std::optional<double>& v) { os << k << "=" << (v ? num(*v) : "none") << "\n"; };
  kv("command", c.command);
  kv("system", c.system);
  kv("params", c.params);
  kv("mode", c.mode);
  kv("order", c.order);
  kv("forced_terms", c.forced_terms ? std::to_string(*c.forced_terms) : "all");
  kv("eps", num(c.eps));
  kv("rho_max", num(c.rho_max));
  kv("n_rho", c.n_rho);
  opt("omega_min", c.omega_min);
  opt("omega_max", c.omega_max);
  kv("monitor", c.monitor);
  kv("n_phi", c.n_phi);
  kv("orders", c.orders);
  kv("omega_grid", c.omega_grid);
  kv("sweep", c.sweep);
  kv("integrator", c.integrator);
  kv("transient_factor", num(c.transient_factor));
  kv("min_periods", c.min_periods);
  kv("max_periods", c.max_periods);
  kv("divergence_bound", num(c.divergence_bound));
  kv("elements", c.elements);
  kv("sigma", c.sigma ? std::to_string(*c.sigma) : "auto");
  kv("full_sigma", c.full_sigma);
  kv("samples", c.samples);
  kv("sample_radius", num(c.sample_radius));
  const auto& t = c.tol;
  for (auto [k, v] : {std::pair{"tol_nonresonance", t.nonresonance}, {"tol_condition", t.condition},
                      {"tol_internal_resonance", t.internal_resonance}, {"tol_near_resonance", t.near_resonance},
                      {"tol_fold", t.fold}, {"tol_g", t.g}, {"tol_residual", t.residual}, {"tol_cauchy", t.cauchy},
                      {"tol_radius", t.radius}, {"tol_steady", t.steady}, {"tol_rk_rel", t.rk_rel},
                      {"tol_rk_abs", t.rk_abs}})
    kv(k, num(v));
  kv("seed", c.seed);
  return os.str();
}

// Staged outputs; nothing reaches the destination paths unless commit() runs.
class OutputSet {
 public:
  void add(std::string path, std::string text) {
    if (!path.empty()) files_.emplace_back(std::move(path), std::move(text));
  }
  void commit() {
    std::vector<std::string> done;
    try {
      for (const auto& [path, text] : files_) {
        write_text_atomically(path, text);
        done.push_back(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : done) std::filesystem::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

inline std::pair<unsigned, unsigned> parse_orders(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const unsigned m = static_cast<unsigned>(std::stoul(s));
      return {m, m};
    }
    return {static_cast<unsigned>(std::stoul(s.substr(0, dots))), static_cast<unsigned>(std::stoul(s.substr(dots + 2)))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_input, "orders must look like 1..25");
  }
}

// "a:b:n" -> n points from a to b inclusive.
inline std::vector<double> parse_grid(const std::string& s) {
  const auto p1 = s.find(':');
  const auto p2 = p1 == std::string::npos ? std::string::npos : s.find(':', p1 + 1);
  if (p2 == std::string::npos) throw Error(ErrorKind::invalid_input, "frequency grid must look like 6.8:7.3:200");
  double a = 0, b = 0;
  long long n = 0;
  try {
    a = std::stod(s.substr(0, p1));
    b = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
    n = std::stoll(s.substr(p2 + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_input, "frequency grid must look like 6.8:7.3:200");
  }
  if (n < 1 || !(b >= a)) throw Error(ErrorKind::invalid_input, "frequency grid needs n >= 1 and end >= start");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = n == 1 ? a : a + (b - a) * k / double(n - 1);
  return g;
}

// "tip" (the system's monitored dof) or a comma list of state indices.
inline std::vector<std::size_t> parse_monitor(const std::string& s, const MechanicalSystem& sys) {
  if (s == "tip" || s == "default") return {sys.monitor};
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument("bad");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_input, "monitor must be 'tip' or a comma list of state indices");
    }
  }
  for (std::size_t c : out)
    if (c >= 2 * sys.n) throw Error(ErrorKind::invalid_input, "monitor index " + std::to_string(c) + " out of range");
  if (out.empty()) throw Error(ErrorKind::invalid_input, "empty monitor list");
  return out;
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

struct Loaded {
  MechanicalSystem sys;
  std::shared_ptr<const ModalModel> mm;
  RunHeader header;
};

inline Loaded load(const RunConfig& c) {
  if (c.system.empty()) throw Error(ErrorKind::invalid_input, "--system is required");
  Loaded L;
  const std::string bytes = read_bytes(c.system);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, "'" + c.system + "' is not valid JSON: " + e.what());
  }
  L.sys = system_from_json(j);
  L.mm = std::make_shared<const ModalModel>(modal_decompose(to_first_order(L.sys), c.mode, c.tol.condition));
  L.header.command = c.command;
  L.header.config_hash = hex64(fnv1a64(canonical(c) + "\n" + bytes));
  L.header.eigenvalues = eigen_digest(*L.mm);
  L.header.generated = utc_timestamp();
  return L;
}

inline NonresonanceReport require_nonresonance(const ModalModel& mm, const RunConfig& c, unsigned order) {
  const long long full = spectral_quotient(mm);
  long long sigma = c.sigma ? *c.sigma : (c.full_sigma ? full : std::min<long long>(full, order));
  sigma = std::max<long long>(sigma, 2);
  auto rep = check_nonresonance(mm, sigma, c.tol.nonresonance);
  if (!rep.pass)
    throw Error(ErrorKind::non_resonance, "non-resonance conditions fail up to order " + std::to_string(sigma) + ":\n" +
                                              describe(rep) + "lower --order or override with --sigma");
  return rep;
}

inline void check_order(unsigned order) {
  if (order < 3 || order % 2 == 0) throw Error(ErrorKind::invalid_input, "order must be odd and at least 3");
}

inline void check_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::invalid_input, "eps must be finite and non-negative");
}

inline std::string cnum(Complex z) {
  return num(z.real()) + (z.imag() < 0 ? " - " : " + ") + num(std::abs(z.imag())) + "i";
}

inline int run_analyze(const RunConfig& c, std::ostream& out) {
  check_order(c.order);
  auto L = load(c);
  const ModalModel& mm = *L.mm;
  const auto rep = require_nonresonance(mm, c, c.order);
  const auto ssm = compute_autonomous_ssm(mm, c.order, c.tol.internal_resonance);
  const Complex c10 = leading_forcing_coefficient(mm);
  const double resid = invariance_residual(ssm, mm, polydisk_samples(c.sample_radius, c.samples, c.seed));

  nlohmann::ordered_json j;
  j["header"] = header_json(L.header);
  j["format"] = "ssmr-analysis/1";
  j["system"] = L.sys.name;
  j["n"] = L.sys.n;
  j["mode"] = c.mode;
  j["normalization"] = to_string(mm.normalization);
  j["eigenvalues"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < mm.lambda.size(); ++i) j["eigenvalues"].push_back(complex_json(mm.lambda[i]));
  j["eigenvector_condition"] = mm.cond_T;
  j["spectral_quotient"] = spectral_quotient(mm);
  j["nonresonance"]["order_checked"] = rep.sigma;
  j["nonresonance"]["pass"] = rep.pass;
  j["nonresonance"]["min_margin"] = rep.min_margin;
  j["nonresonance"]["imaginary_near"] = nlohmann::ordered_json::array();
  for (const auto& t : rep.imag_near)
    j["nonresonance"]["imaginary_near"].push_back({{"a", t.a}, {"b", t.b}, {"l", t.l}, {"margin", t.margin}});
  j["order"] = c.order;
  j["gamma"] = nlohmann::ordered_json::array();
  for (const auto& g : ssm.gamma) j["gamma"].push_back(complex_json(g));
  j["a_coefficients"] = a_coefficients(ssm, ssm.half_order());
  std::vector<double> b = {ssm.lambda1.imag()};
  for (const auto& g : ssm.gamma) b.push_back(g.imag());
  j["b_coefficients"] = b;
  j["c10"] = complex_json(c10);
  j["invariance_residual"] = {{"radius", c.sample_radius}, {"samples", c.samples}, {"seed", c.seed}, {"max", resid}};

  OutputSet outs;
  outs.add(c.out, j.dump(2) + "\n");
  outs.add(c.dump_ssm, ssm_dump(ssm, L.header));
  outs.commit();
  if (!c.quiet) {
    out << "system " << L.sys.name << " (n = " << L.sys.n << ", " << to_string(mm.normalization) << ")\n";
    out << "lambda_1 = " << cnum(mm.lambda1()) << ", cond(T) = " << num(mm.cond_T)
        << ", spectral quotient " << spectral_quotient(mm) << "\n";
    out << "non-resonance checked to order " << rep.sigma << ": pass\n";
    for (std::size_t i = 0; i < ssm.gamma.size(); ++i) out << "gamma_" << i + 1 << " = " << cnum(ssm.gamma[i]) << "\n";
    out << "c_10 = " << cnum(c10) << "\n";
    out << "invariance residual at radius " << num(c.sample_radius) << ": " << num(resid) << "\n";
  }
  return 0;
}

inline int run_frc(const RunConfig& c, std::ostream& out) {
  check_order(c.order);
  check_eps(c.eps);
  auto L = load(c);
  require_nonresonance(*L.mm, c, c.order);
  const unsigned M = (c.order - 1) / 2;
  const unsigned ft = c.forced_terms ? *c.forced_terms : M;
  ReducedModel model(L.mm, c.order, ft, c.tol.internal_resonance, c.tol.near_resonance);
  FrcOptions o;
  o.eps = c.eps;
  o.rho_max = c.rho_max;
  o.n_rho = c.n_rho;
  if (c.omega_min) o.omega_min = *c.omega_min;
  if (c.omega_max) o.omega_max = *c.omega_max;
  o.jobs = c.jobs;
  o.g_tol = c.tol.g;
  o.residual_tol = c.tol.residual;
  o.fold_tol = c.tol.fold;
  o.n_phi = c.n_phi;
  if (c.monitor != "none") {
    const auto mon = parse_monitor(c.monitor, L.sys);
    if (mon.size() != 1) throw Error(ErrorKind::invalid_input, "frc takes a single monitored coordinate");
    o.monitor = mon.front();
  }
  const FrcCurve curve = trace_frc(model, o);
  OutputSet outs;
  if (c.out.empty()) throw Error(ErrorKind::invalid_input, "--out is required");
  outs.add(c.out, frc_csv(curve, L.header));
  outs.add(c.svg, frc_svg(curve, L.header));
  outs.commit();
  if (!c.quiet) {
    out << "eps " << num(c.eps) << ": " << curve.points.size() << " points, " << curve.num_components
        << " component(s), " << curve.folds.size() << " fold(s)\n";
    for (const auto& f : curve.folds)
      out << "  fold at Omega " << num(f.omega) << ", rho " << num(f.rho) << " (component " << f.component << ")\n";
    for (const auto& line : curve.log) out << "  note: " << line << "\n";
  }
  return 0;
}

inline int run_isola(const RunConfig& c, std::ostream& out) {
  check_eps(c.eps);
  const auto [m0, m1] = parse_orders(c.orders);
  if (m0 < 1 || m1 < m0) throw Error(ErrorKind::invalid_input, "orders must satisfy 1 <= M_min <= M_max");
  auto L = load(c);
  const unsigned order = 2 * m1 + 1;
  require_nonresonance(*L.mm, c, order);
  const auto ssm = compute_autonomous_ssm(*L.mm, order, c.tol.internal_resonance);
  RootTrack rt = roots_of_a(ssm, m0, m1);
  ClassifyOptions copt;
  copt.cauchy_tol = c.tol.cauchy;
  copt.radius_fraction = c.tol.radius;
  classify_roots(rt, copt);
  const auto roots = nonspurious_positive_roots(rt);
  const Complex c10 = leading_forcing_coefficient(*L.mm);
  const LeadingIsola li = leading_isola(ssm, c10, c.eps, &rt);
  const auto folds = fold_points(ssm.lambda1.real(), ssm.gamma.at(0).real(), std::abs(c10), c.eps);
  if (c.out.empty()) throw Error(ErrorKind::invalid_input, "--out is required");
  OutputSet outs;
  outs.add(c.out, isola_json(rt, roots, li, folds, c.eps, copt, L.header).dump(2) + "\n");
  outs.add(c.roots_svg, roots_svg(rt, L.header));
  outs.commit();
  if (!c.quiet) {
    for (const auto& w : rt.warnings) out << "warning: " << w << "\n";
    out << "non-spurious positive roots of a(rho):";
    for (const auto& r : roots) out << " " << num(r.rho);
    out << "\n";
    if (li.exists)
      out << "cubic isola: rho_1 = " << num(li.rho1) << ", eps_m = " << num(li.eps_m)
          << (li.disconnected ? " (disconnected at eps)\n" : " (merged at eps)\n");
    else
      out << "cubic isola: none\n";
  }
  return 0;
}

inline int run_verify(const RunConfig& c, std::ostream& out) {
  check_eps(c.eps);
  auto L = load(c);
  SweepOptions so;
  so.eps = c.eps;
  so.omegas = parse_grid(c.omega_grid);
  so.monitor = parse_monitor(c.monitor, L.sys);
  if (c.sweep == "up" || c.sweep == "down") {
    so.warm_start = true;
    so.sweep_down = c.sweep == "down";
  } else if (c.sweep != "none") {
    throw Error(ErrorKind::invalid_input, "--sweep must be up, down or none");
  }
  so.integrator = parse_integrator(c.integrator);
  so.transient_factor = c.transient_factor;
  so.min_periods = c.min_periods;
  so.max_periods = c.max_periods;
  so.steady_tol = c.tol.steady;
  so.divergence_bound = c.divergence_bound;
  so.integration.rel_tol = c.tol.rk_rel;
  so.integration.abs_tol = c.tol.rk_abs;
  so.jobs = c.jobs;
  const SweepResult r = sweep(*L.mm, so);
  if (c.out.empty()) throw Error(ErrorKind::invalid_input, "--out is required");
  OutputSet outs;
  outs.add(c.out, sweep_csv(r, so.monitor, c.eps, L.header));
  outs.commit();
  if (!c.quiet) {
    std::size_t bad = 0;
    double lo = 0, hi = 0;
    for (const auto& rec : r.records)
      if (!rec.converged) {
        if (bad++ == 0) lo = rec.omega;
        hi = rec.omega;
      }
    out << r.records.size() << " frequencies (" << to_string(r.integrator_used) << "), " << bad << " not converged";
    if (bad) out << " within [" << num(lo) << ", " << num(hi) << "]";
    out << "\n";
  }
  return 0;
}

inline int run_beam(const RunConfig& c, std::ostream& out) {
  BeamSpec spec;
  if (!c.params.empty()) spec = beam_spec_from_json(read_json_file(c.params));
  if (c.elements > 0) spec.elements = c.elements;
  const MechanicalSystem sys = build_beam(spec);
  if (c.out.empty()) throw Error(ErrorKind::invalid_input, "--out is required");
  const ModalModel mm = modal_decompose(to_first_order(sys), c.mode, c.tol.condition);
  RunHeader h;
  h.command = c.command;
  std::ostringstream spec_text;
  spec_text << canonical(c) << num(spec.L) << num(spec.h) << num(spec.b) << num(spec.density) << num(spec.E)
            << num(spec.kappa) << num(spec.gamma) << num(spec.alpha) << num(spec.beta) << num(spec.P) << spec.elements;
  h.config_hash = hex64(fnv1a64(spec_text.str()));
  h.eigenvalues = eigen_digest(mm);
  h.generated = utc_timestamp();
  nlohmann::json j = system_to_json(sys);
  j["header"] = header_json(h);
  OutputSet outs;
  outs.add(c.out, j.dump(2) + "\n");
  outs.commit();
  if (!c.quiet)
    out << "beam with " << spec.elements << " elements (n = " << sys.n << "), lambda_1 = " << cnum(mm.lambda1())
        << "\n";
  return 0;
}

}  // namespace detail

// Exit status 0 on success, otherwise exit_code() of the failure kind.
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    if (c.command == "analyze") return detail::run_analyze(c, out);
    if (c.command == "frc") return detail::run_frc(c, out);
    if (c.command == "isola") return detail::run_isola(c, out);
    if (c.command == "verify") return detail::run_verify(c, out);
    if (c.command == "beam") return detail::run_beam(c, out);
    throw Error(ErrorKind::invalid_input, "unknown command '" + c.command + "'");
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ssmr
