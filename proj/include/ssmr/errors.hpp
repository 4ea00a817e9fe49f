#pragma once

#include <stdexcept>
#include <string>

namespace ssmr {

enum class ErrorKind {
  invalid_input,
  unstable_origin,
  semisimplicity,
  non_resonance,
  internal_resonance,
  near_resonance,
  stiffness,
  insufficient_data,
  no_branch,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code used by the command-line tool for each failure class.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return 2;
    case ErrorKind::io: return 2;
    case ErrorKind::non_resonance: return 3;
    case ErrorKind::unstable_origin: return 4;
    case ErrorKind::semisimplicity: return 5;
    case ErrorKind::internal_resonance: return 6;
    case ErrorKind::near_resonance: return 6;
    case ErrorKind::stiffness: return 7;
    case ErrorKind::insufficient_data: return 8;
    case ErrorKind::no_branch: return 9;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::io: return "i/o";
    case ErrorKind::non_resonance: return "non-resonance violated";
    case ErrorKind::unstable_origin: return "unstable origin";
    case ErrorKind::semisimplicity: return "not semisimple";
    case ErrorKind::internal_resonance: return "internal resonance";
    case ErrorKind::near_resonance: return "near resonance";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::no_branch: return "no branch";
  }
  return "error";
}

}  // namespace ssmr
