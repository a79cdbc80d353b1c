#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fpplab/exploration.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/pwit.hpp"
#include "fpplab/weights.hpp"

namespace fpplab {

struct CouplingOptions {
  MinimalRule rule;
  std::vector<int> roots{1, 2};
  std::size_t steps = 0;
  // Re-derives every unthinned step from the boundary (see CouplingSession::audit_step).
  bool audit = false;
  bool trace = false;
  // Skip subtrees of thinned vertices; only honoured for the FPP rule.
  bool prune_thinned = true;
};

// Complete K_n assignment in PWIT scale: X^(K_n)_e = xi_e / n.
struct CoupledWeights {
  std::uint32_t n = 0;
  std::shared_ptr<const std::vector<double>> xi;  // (n+1)x(n+1), symmetric
  std::size_t from_tree = 0;      // first or second case: X(i,i')
  std::size_t fallback = 0;       // third case: independent E_e
  std::size_t cap_fallback = 0;   // mark i' absent among the first 64 n children

  double at(std::uint32_t i, std::uint32_t j) const {
    return (*xi)[static_cast<std::size_t>(i) * (n + 1) + j];
  }
};

// Edge-weight coupling between K_n and a minimal-rule exploration of the
// PWIT(s). N(i) is the step at which mark i first appears unthinned and V(i)
// the vertex carrying it; pair {i,i'} takes X(i,i') when N(i) < N(i'), where
// X(i,i') is the weight of the first child of V(i) with mark i'.
class CouplingSession {
 public:
  static constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

  CouplingSession(PwitSample& sample, const WeightLaw* law, CouplingOptions options);

  // Runs the exploration for the configured step budget.
  void run();
  // Runs until `m` unthinned non-root vertices have been adjoined or `max_steps` is reached.
  void run_until_unthinned(std::size_t m, std::size_t max_steps);

  const Exploration& exploration() const { return ex_; }
  std::uint32_t n() const { return n_; }
  std::size_t N(std::uint32_t i) const;
  // Weight of V(i,i'), the first child of V(i) with mark i'; NaN past the cap.
  double X(std::uint32_t i, std::uint32_t i_prime);

  CoupledWeights coupled_weights();
  // Independent PWIT-scale value n E_e used by the third case.
  double fallback_xi(std::uint32_t i, std::uint32_t j) const;

  // One JSON object per step: step, vertex, edge, key, thinned.
  const std::vector<std::string>& trace() const { return trace_; }
  std::size_t unthinned_steps() const { return unthinned_; }

 private:
  void after_step(const ExploredVertex& v);
  void audit_step(const ExploredVertex& v);

  PwitSample& sample_;
  std::uint32_t n_;
  CouplingOptions options_;
  Exploration ex_;
  std::vector<std::size_t> N_;
  std::vector<std::size_t> owner_;  // explored index of V(i)
  std::size_t unthinned_ = 0;
  std::vector<std::string> trace_;
};

EdgeWeightSource coupled_source(const WeightLaw& law, const CoupledWeights& w);

struct SwtCouplingReport {
  bool match = false;
  std::size_t compared = 0;
  std::size_t exploration_steps = 0;
  std::size_t thinned = 0;
  // First disagreeing step (1-based), 0 when none.
  std::size_t first_mismatch = 0;
  std::vector<std::string> trace;
};

// Single-root FPP exploration with thinning against Dijkstra on the coupled
// K_n weights: the first m unthinned vertices must equal the first m
// smallest-weight-tree steps in edge and in arrival time.
SwtCouplingReport verify_swt_coupling(std::uint64_t seed, const WeightFamily& family,
                                      std::uint32_t n, std::size_t m, bool audit = false);

// FppTime and IpWeight explorations from root 1 of one sample adjoin the
// same first m vertices in the same order.
bool verify_ip_agreement(std::uint64_t seed, const WeightFamily& family, std::uint32_t n,
                         std::size_t m);

}  // namespace fpplab
