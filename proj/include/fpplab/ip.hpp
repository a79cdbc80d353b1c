#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fpplab/pgw.hpp"
#include "fpplab/pwit.hpp"
#include "fpplab/random.hpp"

namespace fpplab {

struct IpObservables {
  std::vector<double> invaded_weights;  // X of the vertex invaded at step 1..K
  std::vector<double> running_max;
  // Step at which the final running max was invaded (the outlet step).
  std::size_t last_max_update_step = 0;
  // Root plus every vertex invaded before the outlet step, in invasion order.
  std::vector<PwitSample::NodeRef> first_pond;
  double M_hat = 0.0;
  std::size_t horizon = 0;
  // The max moved late enough that M_hat may still be below M.
  bool censored = false;

  std::size_t pond_size() const { return first_pond.size(); }
};

// Invasion percolation on one PWIT for K steps. M_hat <= M always.
IpObservables ip_observables(PwitSample& sample, int root, std::size_t K);

// Forward maxima M_0 >= M_1 >= ... >= M_k along the backbone, with
// theta_k = theta(M_k) carried alongside.
struct ForwardMaxChain {
  std::vector<double> M;
  std::vector<double> theta;
};

// M_0 ~ theta; from m, stay with probability m(1 - theta(m)), otherwise jump
// to m' < m with P(M' < m') = theta(m')/theta(m). The jump is drawn as
// theta(M') = V theta(m), V uniform.
ForwardMaxChain forward_max_chain(std::size_t k, KeyedStream& stream);

struct StructuralCaps {
  std::size_t branch_size = 1000000;
  std::uint32_t branch_height = 1000000;
  // Stop sampling further branches once this many cluster vertices exist.
  std::size_t total_size = 10000000;
};

// IP cluster up to backbone height k_max, built from the forward-max chain:
// branch tau_k ~ PGW(M_k (1 - theta(M_k))) rooted at the k-th backbone vertex,
// off-backbone weights Uniform[0, M_k], backbone weight X_k = M_{k-1} when the
// chain drops at k and Uniform[0, M_k] otherwise.
struct StructuralCluster {
  ForwardMaxChain chain;                      // M_0..M_{k_max}
  std::vector<double> backbone_weights;       // [k-1] holds X^BB_k, k = 1..k_max
  std::vector<SampledTree> branches;          // tau_0, tau_1, ...
  std::vector<std::vector<double>> branch_weights;  // per branch, indexed by node; [0] = 0
  // I_0: first k with M_k < M_{k-1}, when it is at most k_max.
  std::optional<std::size_t> first_drop;
  // |tau_0| + ... + |tau_{I_0 - 1}|, the vertices invaded before the outlet.
  std::optional<std::size_t> pond_size;
  bool truncated = false;

  std::size_t size() const;
};

StructuralCluster structural_ip_sampler(std::size_t k_max, const StructuralCaps& caps,
                                        KeyedStream& stream);

// seed,M_hat,last_max_update_step,pond_size,censored
void write_ip_csv_header(std::ostream& os);
void write_ip_csv_row(std::ostream& os, std::uint64_t seed, const IpObservables& obs);

}  // namespace fpplab
