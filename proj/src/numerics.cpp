#include "fpplab/numerics.hpp"

#include <cmath>
#include <cstdio>

namespace fpplab {

std::string format_from_log10(double log10_value) {
  if (std::isnan(log10_value)) return "nan";
  if (log10_value == -INFINITY) return "0";
  if (log10_value == INFINITY) return "inf";
  double e = std::floor(log10_value);
  double m = std::pow(10.0, log10_value - e);
  if (m >= 9.9999999995) {
    m /= 10.0;
    e += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9fe%+d", m, static_cast<int>(e));
  return buf;
}

}  // namespace fpplab
