#pragma once

// Clamped-free Euler-Bernoulli beam with Hermite-cubic elements, Rayleigh
// damping and a cubic spring and damper at the tip.

#include <string>

#include <json.hpp>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"

namespace ssmr {

struct BeamSpec {
  double L = 2700.0;
  double h = 10.0;
  double b = 10.0;
  double density = 1780e-9;
  double E = 45e6;
  double kappa = 6.0;   // tip spring, kappa * w^3
  double gamma = -0.02; // tip damper, gamma * w'^3
  double alpha = 1.25e-4;
  double beta = 2.5e-4;
  double P = 0.1;
  int elements = 25;

  double area() const { return b * h; }
  double inertia() const { return b * h * h * h / 12.0; }
};

inline void validate(const BeamSpec& s) {
  if (!(s.L > 0 && s.h > 0 && s.b > 0 && s.density > 0 && s.E > 0))
    throw Error(ErrorKind::invalid_input, "beam geometry and material constants must be positive");
  if (s.elements < 2) throw Error(ErrorKind::invalid_input, "beam needs at least two elements");
}

// Degrees of freedom [w_1, theta_1, ..., w_m, theta_m] over the free nodes.
inline std::size_t beam_tip_dof(const BeamSpec& s) { return 2 * static_cast<std::size_t>(s.elements - 1); }

inline MechanicalSystem build_beam(const BeamSpec& s) {
  validate(s);
  const int m = s.elements;
  const double l = s.L / m;
  const double rA = s.density * s.area();
  const double EI = s.E * s.inertia();

  Eigen::Matrix4d me, ke;
  me << 156, 22 * l, 54, -13 * l,
        22 * l, 4 * l * l, 13 * l, -3 * l * l,
        54, 13 * l, 156, -22 * l,
        -13 * l, -3 * l * l, -22 * l, 4 * l * l;
  me *= rA * l / 420.0;
  ke << 12, 6 * l, -12, 6 * l,
        6 * l, 4 * l * l, -6 * l, 2 * l * l,
        -12, -6 * l, 12, -6 * l,
        6 * l, 2 * l * l, -6 * l, 4 * l * l;
  ke *= EI / (l * l * l);

  const Eigen::Index full = 2 * (m + 1);
  MatrixXd M = MatrixXd::Zero(full, full), K = MatrixXd::Zero(full, full);
  for (int e = 0; e < m; ++e) {
    M.block<4, 4>(2 * e, 2 * e) += me;
    K.block<4, 4>(2 * e, 2 * e) += ke;
  }

  MechanicalSystem sys;
  sys.name = "cantilever beam, " + std::to_string(m) + " elements";
  sys.n = static_cast<std::size_t>(2 * m);
  const Eigen::Index n = 2 * m;
  sys.M = M.bottomRightCorner(n, n);
  sys.K = K.bottomRightCorner(n, n);
  sys.C = s.alpha * sys.M + s.beta * sys.K;

  const std::size_t tip = beam_tip_dof(s);
  MultiIndex cube_w(2 * sys.n, 0u), cube_v(2 * sys.n, 0u);
  cube_w[tip] = 3;
  cube_v[sys.n + tip] = 3;
  sys.g.push_back({tip, s.kappa, cube_w});
  sys.g.push_back({tip, s.gamma, cube_v});
  sys.f = VectorXd::Zero(n);
  sys.f[static_cast<Eigen::Index>(tip)] = s.P;
  sys.normalization = Normalization::unit_norm;
  sys.monitor = tip;
  return sys;
}

inline BeamSpec beam_spec_from_json(const nlohmann::json& j) {
  try {
    BeamSpec s;
    s.L = j.value("L", s.L);
    s.h = j.value("h", s.h);
    s.b = j.value("b", s.b);
    s.density = j.value("density", s.density);
    s.E = j.value("E", s.E);
    s.kappa = j.value("kappa", s.kappa);
    s.gamma = j.value("gamma", s.gamma);
    s.alpha = j.value("alpha", s.alpha);
    s.beta = j.value("beta", s.beta);
    s.P = j.value("P", s.P);
    s.elements = j.value("elements", s.elements);
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, std::string("malformed beam parameters: ") + e.what());
  }
}

}  // namespace ssmr
