#include "fpplab/pgw.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "fpplab/errors.hpp"

namespace fpplab {

double survival_probability(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("offspring mean must be positive");
  if (m <= 1.0) return 0.0;
  // 1 - e^{-m t} - t is positive on (0, theta) and negative on (theta, 1].
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (-std::expm1(-m * mid) - mid > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double survival_inverse(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("survival_inverse needs u in (0,1)");
  double x = -std::log1p(-u) / u;
  return std::max(x, std::nextafter(1.0, 2.0));
}

double survival_inverse_bisect(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("survival_inverse needs u in (0,1)");
  double lo = 1.0, hi = 2.0;
  while (survival_probability(hi) < u) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (survival_probability(mid) < u) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double dual_mean(double m) {
  if (!(m > 1.0) || !std::isfinite(m)) throw DomainError("dual_mean needs m > 1");
  return m * (1.0 - survival_probability(m));
}

ProgenyProbability total_progeny_pmf(double m, std::uint64_t k) {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("offspring mean must be positive");
  if (k < 1) throw DomainError("total progeny is at least 1");
  const double kd = static_cast<double>(k);
  ProgenyProbability p;
  p.log_value = -m * kd + (kd - 1.0) * std::log(m * kd) - std::lgamma(kd + 1.0);
  p.value = std::exp(p.log_value);
  p.underflow = p.value < DBL_MIN;
  if (p.underflow) p.value = 0.0;
  return p;
}

double total_progeny_stirling(double m, std::uint64_t k) {
  const double kd = static_cast<double>(k);
  return std::exp(-(m - 1.0 - std::log(m)) * kd) /
         (m * std::sqrt(2.0 * std::numbers::pi * kd * kd * kd));
}

SampledTree sample_tree(double m, std::size_t size_cap, std::uint32_t height_cap,
                        KeyedStream& stream) {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("offspring mean must be positive");
  if (size_cap < 1 || height_cap < 1) throw DomainError("tree caps must be at least 1");
  SampledTree t;
  t.parent.push_back(-1);
  t.child_count.push_back(0);
  t.depth.push_back(0);
  std::poisson_distribution<std::uint32_t> offspring(m);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t c = offspring(stream);
    if (c == 0) continue;
    // The drawn count is kept on the node where a cap stops the walk.
    t.child_count[i] = c;
    if (t.depth[i] >= height_cap || t.size() + c > size_cap) {
      t.truncated = true;
      break;
    }
    const std::uint32_t d = t.depth[i] + 1;
    for (std::uint32_t j = 0; j < c; ++j) {
      t.parent.push_back(static_cast<std::int64_t>(i));
      t.child_count.push_back(0);
      t.depth.push_back(d);
    }
    t.height = std::max(t.height, d);
  }
  return t;
}

double sample_M(KeyedStream& stream) { return survival_inverse(stream.uniform()); }

void write_pmf_csv(std::ostream& os, const std::vector<double>& means, std::uint64_t k_max) {
  os << "m,k,pmf\n";
  char buf[64];
  for (double m : means) {
    for (std::uint64_t k = 1; k <= k_max; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", total_progeny_pmf(m, k).value);
      os << m << ',' << k << ',' << buf << '\n';
    }
  }
}

}  // namespace fpplab
