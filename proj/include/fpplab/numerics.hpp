#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fpplab/errors.hpp"

namespace fpplab {

struct Integral {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// One 21-point Kronrod panel with the embedded 10-point Gauss estimate.
template <class F>
Panel kronrod_panel(F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = f(c) * wk[0], g = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double pair = f(c + h * x[i]) + f(c - h * x[i]);
    k += pair * wk[i];
    if (i % 2 == 1) g += pair * wg[i / 2];
  }
  return {a, b, k * h, std::abs(k - g) * h};
}

}  // namespace detail

// Globally adaptive 21-point Gauss-Kronrod over the panels [x0,x1],[x1,x2],...:
// the panel with the largest error estimate is bisected until the summed
// error is within rel_tol of the summed value, or `max_panels` is reached.
template <class F>
Integral integrate_panels(F&& f, std::span<const double> breaks, double rel_tol = 1e-13,
                          std::size_t max_panels = 4000) {
  Integral out;
  std::vector<detail::Panel> heap;
  auto counted = [&](double x) {
    ++out.evaluations;
    return f(x);
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) heap.push_back(detail::kronrod_panel(counted, breaks[i], breaks[i + 1]));
  }
  std::make_heap(heap.begin(), heap.end());
  auto totals = [&] {
    out.value = out.error = 0.0;
    for (const auto& p : heap) {
      out.value += p.value;
      out.error += p.error;
    }
  };
  totals();
  while (!heap.empty() && heap.size() < max_panels && out.error > rel_tol * std::abs(out.value)) {
    std::pop_heap(heap.begin(), heap.end());
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    for (const auto& half : {detail::kronrod_panel(counted, worst.a, mid),
                             detail::kronrod_panel(counted, mid, worst.b)}) {
      heap.push_back(half);
      std::push_heap(heap.begin(), heap.end());
      out.value += half.value;
      out.error += half.error;
    }
    out.value -= worst.value;
    out.error -= worst.error;
  }
  totals();
  return out;
}

template <class F>
Integral integrate(F&& f, double a, double b, double rel_tol = 1e-13, std::size_t max_panels = 4000) {
  const double breaks[] = {a, b};
  return integrate_panels(f, std::span<const double>(breaks), rel_tol, max_panels);
}

// Bisection for an increasing predicate boundary: returns the point where
// `above(x)` switches from false (at lo) to true (at hi).
template <class Pred>
double bisect_boundary(Pred&& above, double lo, double hi, int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (above(mid)) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Formats 10^log10_value with 10 significant digits, for quantities whose
// plain double representation would underflow.
std::string format_from_log10(double log10_value);

}  // namespace fpplab
