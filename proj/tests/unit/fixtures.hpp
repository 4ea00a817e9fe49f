// Shared systems for the unit tests. Models are built once and reused read-only.
#pragma once

#include <memory>
#include <string>

#include <gtest/gtest.h>

#include "ssmr/ssmr.hpp"

namespace ssmr::test {

inline std::string sample(const std::string& name) { return std::string(SSMR_SAMPLE_DIR) + "/" + name; }

inline std::shared_ptr<const ModalModel> modal_of(const MechanicalSystem& sys, std::size_t mode = 1) {
  return std::make_shared<const ModalModel>(modal_decompose(to_first_order(sys), mode));
}

inline const MechanicalSystem& shaw_pierre() {
  static const MechanicalSystem s = load_system(sample("shaw_pierre.json"));
  return s;
}

inline const MechanicalSystem& shaw_pierre_linear() {
  static const MechanicalSystem s = load_system(sample("shaw_pierre_linear.json"));
  return s;
}

inline const MechanicalSystem& quintic() {
  static const MechanicalSystem s = load_system(sample("shaw_pierre_quintic.json"));
  return s;
}

inline const MechanicalSystem& beam() {
  static const MechanicalSystem s = build_beam(BeamSpec{});
  return s;
}

inline std::shared_ptr<const ModalModel> shaw_pierre_modal() {
  static const auto mm = modal_of(shaw_pierre());
  return mm;
}

inline std::shared_ptr<const ModalModel> linear_modal() {
  static const auto mm = modal_of(shaw_pierre_linear());
  return mm;
}

inline std::shared_ptr<const ModalModel> beam_modal() {
  static const auto mm = modal_of(beam());
  return mm;
}

// m x'' + c x' + k x + cubic x^3 = f cos(Omega t)
inline MechanicalSystem oscillator(double m, double c, double k, double cubic, double f) {
  MechanicalSystem s;
  s.name = "oscillator";
  s.n = 1;
  s.M = MatrixXd::Constant(1, 1, m);
  s.C = MatrixXd::Constant(1, 1, c);
  s.K = MatrixXd::Constant(1, 1, k);
  if (cubic != 0.0) s.g.push_back({0, cubic, MultiIndex{3, 0}});
  s.f = VectorXd::Constant(1, f);
  return s;
}

inline double rel_err(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

}  // namespace ssmr::test
