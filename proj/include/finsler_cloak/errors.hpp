#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "finsler_cloak/linalg.hpp"

namespace finsler_cloak {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric evaluation produced a non-finite value, or was called with an
/// invalid position/direction.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Vec x, Vec y)
      : Error(what + " at x=" + to_string(x) + ", y=" + to_string(y)),
        position(std::move(x)),
        direction(std::move(y)) {}

  Vec position;
  Vec direction;
};

/// Strong convexity failure: the fundamental tensor is not positive definite.
class PositiveDefinitenessError : public Error {
 public:
  PositiveDefinitenessError(Vec x, Vec y, std::vector<double> minors,
                            std::vector<double> eigenvalues)
      : Error("metric tensor not positive definite at x=" + to_string(x) +
              ", y=" + to_string(y) + " (leading minors " +
              join(minors) + "; eigenvalues " + join(eigenvalues) + ")"),
        position(std::move(x)),
        direction(std::move(y)),
        leading_minors(std::move(minors)),
        eigenvalues(std::move(eigenvalues)) {}

  Vec position;
  Vec direction;
  std::vector<double> leading_minors;
  std::vector<double> eigenvalues;

 private:
  static std::string join(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(v[i]);
    }
    return out + "]";
  }
};

/// The spray linear system g a = rhs is too ill-conditioned to trust.
class IllConditionedError : public Error {
 public:
  IllConditionedError(Vec x, Vec y, double condition)
      : Error("ill-conditioned metric (cond=" + std::to_string(condition) +
              ") at x=" + to_string(x) + ", y=" + to_string(y)),
        position(std::move(x)),
        direction(std::move(y)),
        condition_number(condition) {}

  Vec position;
  Vec direction;
  double condition_number;
};

class SingularMapError : public Error {
 public:
  using Error::Error;
};

/// Query inside the shielded ball, where the cloak metric is undefined.
class ShieldInteriorError : public Error {
 public:
  ShieldInteriorError(double r, double shield_radius)
      : Error("radius " + std::to_string(r) + " lies inside the shield (R1=" +
              std::to_string(shield_radius) + ")"),
        radius(r) {}

  double radius;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MaterialSolveError : public Error {
 public:
  using Error::Error;
};

/// Configuration or schema violation (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File I/O failure with path context (CLI exit code 3).
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path(path) {}

  std::string path;
};

}  // namespace finsler_cloak
