#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fpplab/random.hpp"

namespace fpplab {

// Survival probability theta(m) of a Poisson(m) Galton-Watson tree: the
// largest root of 1 - theta = e^{-m theta}; zero for m <= 1.
double survival_probability(double m);

// The same root through the explicit inverse x(u) = -log(1-u)/u, bisected in
// x. Independent of survival_probability; used as a cross-check.
double survival_inverse_bisect(double u);

// theta^{-1}(u) for u in (0,1): theta(x) = u iff x = -log(1-u)/u.
double survival_inverse(double u);

// m(1 - theta(m)) < 1 for m > 1.
double dual_mean(double m);

struct ProgenyProbability {
  double value = 0.0;
  double log_value = 0.0;
  bool underflow = false;
};

// P_m(|tree| = k) = e^{-mk} (mk)^{k-1} / k!, evaluated in log space.
ProgenyProbability total_progeny_pmf(double m, std::uint64_t k);

// Large-k form (m sqrt(2 pi k^3))^{-1} e^{-(m - 1 - log m) k}.
double total_progeny_stirling(double m, std::uint64_t k);

// Breadth-first tree; node 0 is the root and parents precede children.
struct SampledTree {
  std::vector<std::int64_t> parent;
  std::vector<std::uint32_t> child_count;
  std::vector<std::uint32_t> depth;
  std::uint32_t height = 0;
  bool truncated = false;

  std::size_t size() const { return parent.size(); }
};

SampledTree sample_tree(double m, std::size_t size_cap, std::uint32_t height_cap,
                        KeyedStream& stream);

// M with P(M <= x) = theta(x).
double sample_M(KeyedStream& stream);

// CSV rows m,k,pmf for k = 1..k_max.
void write_pmf_csv(std::ostream& os, const std::vector<double>& means, std::uint64_t k_max);

}  // namespace fpplab
