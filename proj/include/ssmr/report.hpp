#pragma once

// Text artifacts: CSV, JSON and SVG writers sharing one provenance header.
// Bodies are deterministic; only the "generated" line carries wall-clock time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ssmr/frc.hpp"
#include "ssmr/isola.hpp"
#include "ssmr/model.hpp"
#include "ssmr/oracle.hpp"
#include "ssmr/ssm_auto.hpp"

#ifndef SSMR_VERSION
#define SSMR_VERSION "0.0.0"
#endif

namespace ssmr {

inline constexpr const char* kToolName = "ssm-resolve";
inline constexpr const char* kToolVersion = SSMR_VERSION;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest text that round-trips the double.
inline std::string num(double v) {
  char buf[32];
  for (int p = 6; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunHeader {
  std::string command;
  std::string config_hash;
  std::vector<Complex> eigenvalues;  // master pair first
  std::string generated;
};

inline std::string eigen_summary(const std::vector<Complex>& ev) {
  std::string s;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i) s += " ";
    s += num(ev[i].real()) + (ev[i].imag() < 0 ? "-" : "+") + num(std::abs(ev[i].imag())) + "i";
  }
  return s;
}

// Master pair plus the representatives of up to three further modes.
inline std::vector<Complex> eigen_digest(const ModalModel& mm, std::size_t count = 4) {
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < mm.lambda.size() && out.size() < 2 * count; ++i) out.push_back(mm.lambda[i]);
  return out;
}

inline std::string header_lines(const RunHeader& h, std::string_view prefix = "# ") {
  std::ostringstream os;
  os << prefix << "tool: " << kToolName << " " << kToolVersion << "\n";
  os << prefix << "command: " << h.command << "\n";
  os << prefix << "config-hash: " << h.config_hash << "\n";
  os << prefix << "eigenvalues: " << eigen_summary(h.eigenvalues) << "\n";
  os << prefix << "generated: " << h.generated << "\n";
  return os.str();
}

inline nlohmann::ordered_json header_json(const RunHeader& h) {
  nlohmann::ordered_json j;
  j["tool"] = std::string(kToolName) + " " + kToolVersion;
  j["command"] = h.command;
  j["config_hash"] = h.config_hash;
  j["eigenvalues"] = eigen_summary(h.eigenvalues);
  j["generated"] = h.generated;
  return j;
}

inline nlohmann::ordered_json complex_json(Complex z) { return nlohmann::ordered_json::array({z.real(), z.imag()}); }

// ---- coefficient dump ----

inline std::string ssm_dump(const AutonomousSsm& ssm, const RunHeader& h) {
  std::ostringstream os;
  os << header_lines(h);
  os << "format ssmr-ssm/1\n";
  os << "order " << ssm.order << "\n";
  os << "lambda1 " << num(ssm.lambda1.real()) << " " << num(ssm.lambda1.imag()) << "\n";
  for (std::size_t i = 0; i < ssm.gamma.size(); ++i)
    os << "gamma " << i + 1 << " " << num(ssm.gamma[i].real()) << " " << num(ssm.gamma[i].imag()) << "\n";
  auto series = [&](const char* tag, std::size_t row, const BivariateSeries& s) {
    for (unsigned d = 0; d <= s.order(); ++d)
      for (unsigned b = 0; b <= d; ++b) {
        const Complex c = s.at(d - b, b);
        if (c == Complex{}) continue;
        os << tag << " " << row << " " << d - b << " " << b << " " << num(c.real()) << " " << num(c.imag()) << "\n";
      }
  };
  for (std::size_t r = 0; r < ssm.R.size(); ++r) series("R", r, ssm.R[r]);
  for (std::size_t r = 0; r < ssm.W.size(); ++r) series("W", r, ssm.W[r]);
  return os.str();
}

// ---- FRC ----

inline std::string frc_csv(const FrcCurve& c, const RunHeader& h) {
  std::ostringstream os;
  os << header_lines(h);
  os << "# eps: " << num(c.eps) << "\n";
  os << "# components: " << c.num_components << "\n";
  for (const auto& f : c.folds)
    os << "# fold: component " << f.component << " Omega " << num(f.omega) << " rho " << num(f.rho) << "\n";
  os << "component,branch,Omega,rho,psi,stability,physical_amplitude\n";
  for (const auto& p : c.points)
    os << p.component << "," << to_string(p.branch) << "," << num(p.omega) << "," << num(p.rho) << "," << num(p.psi)
       << "," << to_string(p.stability) << "," << (std::isnan(p.amplitude) ? std::string("nan") : num(p.amplitude))
       << "\n";
  return os.str();
}

namespace detail {

struct Frame {
  double x0, x1, y0, y1;
  double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double sx(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
  double sy(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

inline Frame make_frame(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double px = 0.03 * (x1 - x0), py = 0.05 * (y1 - y0);
  return {x0 - px, x1 + px, y0 - py, y1 + py};
}

inline std::string svg_axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << "<rect x=\"" << f.L << "\" y=\"" << f.T << "\" width=\"" << f.W - f.L - f.R << "\" height=\""
     << f.H - f.T - f.B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.4g", x);
    std::snprintf(by, sizeof by, "%.3g", y);
    os << "<text x=\"" << f.sx(x) << "\" y=\"" << f.H - f.B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">" << bx
       << "</text>\n";
    os << "<text x=\"" << f.L - 6 << "\" y=\"" << f.sy(y) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << by
       << "</text>\n";
  }
  os << "<text x=\"" << (f.L + f.W - f.R) / 2 << "\" y=\"" << f.H - 10 << "\" font-size=\"13\" text-anchor=\"middle\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (f.T + f.H - f.B) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (f.T + f.H - f.B) / 2 << ")\">" << ylabel << "</text>\n";
  return os.str();
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085"};
  return colors[k % 6];
}

}  // namespace detail

// Amplitude (or rho when no amplitude was evaluated) against Omega; unstable pieces dashed.
inline std::string frc_svg(const FrcCurve& c, const RunHeader& h) {
  const bool amp = !c.points.empty() && !std::isnan(c.points.front().amplitude);
  auto yv = [&](const FrcPoint& p) { return amp ? p.amplitude : p.rho; };
  double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = -1e300;
  for (const auto& p : c.points) {
    x0 = std::min(x0, p.omega);
    x1 = std::max(x1, p.omega);
    y1 = std::max(y1, yv(p));
  }
  const auto f = detail::make_frame(x0, x1, y0, y1);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n" << header_lines(h, "") << "-->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.W << "\" height=\"" << f.H << "\">\n";
  os << detail::svg_axes(f, "Omega", amp ? "amplitude" : "rho");
  std::map<std::pair<int, int>, std::vector<const FrcPoint*>> runs;
  for (const auto& p : c.points) runs[{p.component, p.branch == Branch::plus ? 0 : 1}].push_back(&p);
  for (auto& [key, pts] : runs) {
    std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->grid_index < b->grid_index; });
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const auto *a = pts[k - 1], *b = pts[k];
      if (b->grid_index - a->grid_index > 2) continue;
      const bool dashed = a->stability == Stability::unstable || b->stability == Stability::unstable;
      os << "<line x1=\"" << f.sx(a->omega) << "\" y1=\"" << f.sy(yv(*a)) << "\" x2=\"" << f.sx(b->omega) << "\" y2=\""
         << f.sy(yv(*b)) << "\" stroke=\"" << detail::palette(static_cast<std::size_t>(std::max(key.first, 0)))
         << "\" stroke-width=\"1.6\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

// ---- isola ----

inline nlohmann::ordered_json isola_json(const RootTrack& rt, const std::vector<NonspuriousRoot>& roots,
                                         const LeadingIsola& li, const std::vector<double>& folds, double eps,
                                         const ClassifyOptions& copt, const RunHeader& h) {
  nlohmann::ordered_json j;
  j["header"] = header_json(h);
  j["format"] = "ssmr-isola/1";
  j["eps"] = eps;
  j["classification"] = {{"cauchy_tol", copt.cauchy_tol}, {"radius_fraction", copt.radius_fraction}};
  j["warnings"] = rt.warnings;
  auto& orders = j["root_track"]["orders"];
  orders = nlohmann::ordered_json::array();
  for (const auto& [M, roots_m] : rt.roots) {
    nlohmann::ordered_json o;
    o["M"] = M;
    o["radius"] = rt.radius.at(M);
    o["roots"] = nlohmann::ordered_json::array();
    for (const auto& z : roots_m) o["roots"].push_back(complex_json(z));
    orders.push_back(o);
  }
  auto& traj = j["root_track"]["trajectories"];
  traj = nlohmann::ordered_json::array();
  for (const auto& t : rt.trajectories) {
    nlohmann::ordered_json o;
    o["first_order"] = t.by_order.begin()->first;
    o["roots"] = nlohmann::ordered_json::array();
    for (const auto& [M, z] : t.by_order) o["roots"].push_back(complex_json(z));
    o["nonspurious"] = t.nonspurious;
    o["positive_real"] = t.positive_real;
    o["cauchy_change"] = std::isfinite(t.cauchy_change) ? nlohmann::ordered_json(t.cauchy_change) : nullptr;
    o["radius_fraction"] = std::isfinite(t.radius_fraction) ? nlohmann::ordered_json(t.radius_fraction) : nullptr;
    traj.push_back(o);
  }
  auto& rep = j["report"];
  rep["nonspurious_roots"] = nlohmann::ordered_json::array();
  for (const auto& r : roots)
    rep["nonspurious_roots"].push_back({{"rho", r.rho}, {"slope", r.slope}, {"transverse", r.transverse}});
  auto opt_num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  rep["leading"] = {{"exists", li.exists},
                    {"rho1", opt_num(li.rho1)},
                    {"eps_m", opt_num(li.eps_m)},
                    {"rho_tilde", opt_num(li.rho_tilde)},
                    {"disconnected_at_eps", li.disconnected}};
  rep["fold_rho"] = folds;
  return j;
}

// Complex-plane scatter of the roots, coloured from dark (low order) to bright (high order).
inline std::string roots_svg(const RootTrack& rt, const RunHeader& h) {
  double lim = 0.0;
  for (const auto& [M, rs] : rt.roots)
    for (const auto& z : rs) lim = std::max({lim, std::abs(z.real()), std::abs(z.imag())});
  if (lim == 0.0) lim = 1.0;
  detail::Frame f{-lim * 1.05, lim * 1.05, -lim * 1.05, lim * 1.05};
  f.W = 520;
  f.H = 520;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n" << header_lines(h, "") << "-->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.W << "\" height=\"" << f.H << "\">\n";
  os << detail::svg_axes(f, "Re rho", "Im rho");
  const double span = std::max<double>(1.0, static_cast<double>(rt.M_max - rt.M_min));
  for (const auto& [M, rs] : rt.roots) {
    const double u = static_cast<double>(M - rt.M_min) / span;
    char color[16];
    std::snprintf(color, sizeof color, "#%02x%02x%02x", static_cast<int>(40 + 215 * u), static_cast<int>(30 + 190 * u),
                  static_cast<int>(120 - 100 * u));
    for (const auto& z : rs)
      for (double sgn : {1.0, -1.0})
        os << "<circle cx=\"" << f.sx(sgn * z.real()) << "\" cy=\"" << f.sy(sgn * z.imag()) << "\" r=\"2.5\" fill=\""
           << color << "\"/>\n";
  }
  if (!rt.radius.empty()) {
    const double r = rt.radius.rbegin()->second;
    if (std::isfinite(r) && r < 10 * lim)
      os << "<circle cx=\"" << f.sx(0) << "\" cy=\"" << f.sy(0) << "\" r=\"" << f.sx(r) - f.sx(0)
         << "\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4,3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- sweep ----

inline std::string sweep_csv(const SweepResult& r, const std::vector<std::size_t>& monitor, double eps,
                             const RunHeader& h) {
  std::ostringstream os;
  os << header_lines(h);
  os << "# eps: " << num(eps) << "\n";
  os << "# integrator: " << to_string(r.integrator_used) << "\n";
  os << "Omega";
  for (std::size_t c : monitor) os << ",amplitude_x" << c;
  os << ",converged,diverged,periods\n";
  for (const auto& rec : r.records) {
    os << num(rec.omega);
    for (double a : rec.amplitude) os << "," << (std::isfinite(a) ? num(a) : std::string("inf"));
    os << "," << (rec.converged ? 1 : 0) << "," << (rec.diverged ? 1 : 0) << "," << rec.periods << "\n";
  }
  return os.str();
}

}  // namespace ssmr
