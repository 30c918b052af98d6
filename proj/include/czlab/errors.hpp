#pragma once

#include <stdexcept>
#include <string>

namespace czlab {

// Bad input shape or value (wrong length, out-of-range level, malformed config).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Parameter outside the mathematical domain of a construction (e.g. Bessel lambda <= -1/2).
struct ParameterDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A construction produced an object violating its defining invariants.
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace czlab
