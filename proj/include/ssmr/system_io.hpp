#pragma once

// JSON system file reader and writer. The layout is documented in docs/formats.md.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ssmr/errors.hpp"
#include "ssmr/model.hpp"

namespace ssmr {

inline constexpr const char* kSystemFormat = "ssmr-system/1";

namespace detail {

inline MatrixXd read_square(const nlohmann::json& j, const char* key, std::size_t n) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw Error(ErrorKind::invalid_input, std::string("missing matrix '") + key + "'");
  const auto& a = j.at(key);
  if (a.size() != n * n)
    throw Error(ErrorKind::invalid_input, std::string("matrix '") + key + "' must hold n*n row-major entries");
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const auto& v = a.at(r * n + c);
      if (!v.is_number()) throw Error(ErrorKind::invalid_input, std::string("non-numeric entry in '") + key + "'");
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v.get<double>();
    }
  return X;
}

inline nlohmann::json write_square(const MatrixXd& X) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    for (Eigen::Index c = 0; c < X.cols(); ++c) a.push_back(X(r, c));
  return a;
}

}  // namespace detail

inline Normalization parse_normalization(const std::string& s) {
  if (s == "first_position") return Normalization::first_position;
  if (s == "unit_norm") return Normalization::unit_norm;
  throw Error(ErrorKind::invalid_input, "unknown normalization '" + s + "'");
}

inline MechanicalSystem system_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::invalid_input, "system document must be a JSON object");
    if (j.contains("format") && j.at("format").get<std::string>() != kSystemFormat)
      throw Error(ErrorKind::invalid_input, "unsupported system format '" + j.at("format").get<std::string>() + "'");
    MechanicalSystem sys;
    sys.name = j.value("name", std::string("system"));
    const long long n = j.at("n").get<long long>();
    if (n <= 0) throw Error(ErrorKind::invalid_input, "n must be positive");
    sys.n = static_cast<std::size_t>(n);
    sys.M = detail::read_square(j, "M", sys.n);
    sys.C = detail::read_square(j, "C", sys.n);
    sys.K = detail::read_square(j, "K", sys.n);
    if (j.contains("nonlinear")) {
      for (const auto& t : j.at("nonlinear")) {
        NonlinearTerm term;
        const long long dof = t.at("dof").get<long long>();
        if (dof < 0) throw Error(ErrorKind::invalid_input, "negative nonlinear term row");
        term.dof = static_cast<std::size_t>(dof);
        term.coefficient = t.at("coefficient").get<double>();
        for (const auto& e : t.at("exponents")) {
          const long long v = e.get<long long>();
          if (v < 0) throw Error(ErrorKind::invalid_input, "negative exponent");
          term.exponents.push_back(static_cast<unsigned>(v));
        }
        sys.g.push_back(term);
      }
    }
    const auto& forcing = j.at("forcing");
    if (forcing.contains("harmonics") || forcing.value("harmonic", 1) != 1)
      throw Error(ErrorKind::invalid_input,
                  "only a single cosine harmonic at the forcing frequency is supported");
    const auto& shape = forcing.at("shape");
    if (shape.size() != sys.n) throw Error(ErrorKind::invalid_input, "forcing shape must have length n");
    sys.f.resize(static_cast<Eigen::Index>(sys.n));
    for (std::size_t i = 0; i < sys.n; ++i) sys.f[static_cast<Eigen::Index>(i)] = shape.at(i).get<double>();
    sys.normalization = parse_normalization(j.value("normalization", std::string("first_position")));
    const long long mon = j.value("monitor", 0LL);
    if (mon < 0) throw Error(ErrorKind::invalid_input, "monitor index must be non-negative");
    sys.monitor = static_cast<std::size_t>(mon);
    validate(sys);
    return sys;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, std::string("malformed system document: ") + e.what());
  }
}

inline nlohmann::json system_to_json(const MechanicalSystem& sys) {
  nlohmann::json j;
  j["format"] = kSystemFormat;
  j["name"] = sys.name;
  j["n"] = sys.n;
  j["M"] = detail::write_square(sys.M);
  j["C"] = detail::write_square(sys.C);
  j["K"] = detail::write_square(sys.K);
  j["nonlinear"] = nlohmann::json::array();
  for (const auto& t : sys.g) {
    nlohmann::json e = nlohmann::json::array();
    for (unsigned v : t.exponents) e.push_back(v);
    j["nonlinear"].push_back({{"dof", t.dof}, {"coefficient", t.coefficient}, {"exponents", e}});
  }
  nlohmann::json shape = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sys.f.size(); ++i) shape.push_back(sys.f[i]);
  j["forcing"] = {{"shape", shape}, {"harmonic", 1}};
  j["normalization"] = to_string(sys.normalization);
  j["monitor"] = sys.monitor;
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "': " + e.what());
  }
}

inline MechanicalSystem load_system(const std::filesystem::path& path) {
  return system_from_json(read_json_file(path));
}

// Writes through a sibling temporary file so a failed write never leaves a partial file.
inline void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::io, "cannot move output into '" + path.string() + "': " + ec.message());
  }
}

inline void save_system(const MechanicalSystem& sys, const std::filesystem::path& path) {
  write_text_atomically(path, system_to_json(sys).dump(2) + "\n");
}

}  // namespace ssmr
