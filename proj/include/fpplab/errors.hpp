#pragma once

#include <stdexcept>

namespace fpplab {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct RangeError : std::range_error {
  using std::range_error::range_error;
};

// Quadrature or root finding failed to reach its tolerance.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExhaustionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal bookkeeping contradiction, e.g. two unthinned vertices sharing a mark.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SizeError : std::length_error {
  using std::length_error::length_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fpplab
