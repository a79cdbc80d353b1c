#pragma once

#include <compare>

namespace fpplab {

// Arrival time kept as an unevaluated sum hi + lo (double-double).
//
// Times in the freezing runs reach f_n(M)/f_n(1) = M^{s_n}, which for s_n = 32
// and M = 5 is about 1e22, while the relevant dynamics happen on the unit
// scale. A plain double cannot resolve those differences.
struct Time {
  double hi = 0.0;
  double lo = 0.0;

  constexpr Time() = default;
  constexpr explicit Time(double v) : hi(v), lo(0.0) {}

  double value() const { return hi + lo; }

  friend constexpr bool operator==(const Time&, const Time&) = default;
  friend constexpr std::partial_ordering operator<=>(const Time& a, const Time& b) {
    if (auto c = a.hi <=> b.hi; c != 0) return c;
    return a.lo <=> b.lo;
  }
};

namespace detail {
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}
inline void quick_two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  e = b - (s - a);
}
}  // namespace detail

inline Time operator+(const Time& a, double b) {
  double s, e;
  detail::two_sum(a.hi, b, s, e);
  e += a.lo;
  Time r;
  detail::quick_two_sum(s, e, r.hi, r.lo);
  return r;
}

inline Time operator+(const Time& a, const Time& b) {
  double s, e;
  detail::two_sum(a.hi, b.hi, s, e);
  e += a.lo + b.lo;
  Time r;
  detail::quick_two_sum(s, e, r.hi, r.lo);
  return r;
}

// Difference rounded to double; accurate to a relative 1e-16 of the result.
inline double operator-(const Time& a, const Time& b) {
  double s, e;
  detail::two_sum(a.hi, -b.hi, s, e);
  return s + (e + (a.lo - b.lo));
}

// a + (b - a) * w, with the offset added in double-double.
inline Time lerp(const Time& a, const Time& b, double w) { return a + (b - a) * w; }

}  // namespace fpplab
