#ifndef ADCBOUND_ERRORS_HPP
#define ADCBOUND_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace adcbound {

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Spectrum has zero or more than one eigenvalue near the unit circle, or the
// near-unit eigenvalue is not real and simple.
struct UnsupportedSpectrum : ModelError {
  explicit UnsupportedSpectrum(const std::string& what) : ModelError(what) {}
};

// C is orthogonal to the unit-circle eigenvector; the bounded computational
// region cannot be derived automatically.
struct DegenerateOutputDirection : ModelError {
  explicit DegenerateOutputDirection(const std::string& what) : ModelError(what) {}
};

struct OutOfRange : std::runtime_error {
  double norm;
  explicit OutOfRange(const std::string& what, double n)
      : std::runtime_error(what), norm(n) {}
};

struct CapacityExceeded : std::runtime_error {
  explicit CapacityExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergentPoint : std::runtime_error {
  explicit NoConvergentPoint(const std::string& what) : std::runtime_error(what) {}
};

struct RegionExpansionLimit : std::runtime_error {
  explicit RegionExpansionLimit(const std::string& what) : std::runtime_error(what) {}
};

struct AlphabetViolation : std::runtime_error {
  double value;
  explicit AlphabetViolation(const std::string& what, double v)
      : std::runtime_error(what), value(v) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adcbound

#endif
