#include "fpplab/ip.hpp"

#include <cstdio>
#include <ostream>

#include "fpplab/errors.hpp"
#include "fpplab/exploration.hpp"

namespace fpplab {

IpObservables ip_observables(PwitSample& sample, int root, std::size_t K) {
  if (K < 1) throw DomainError("IP horizon must be at least 1");
  MinimalRule rule{RuleKind::IpWeight, SidePolicy::SingleTree, root};
  Exploration ex(sample, rule, {root}, nullptr, ExplorationOptions{.thinning = false});

  IpObservables obs;
  obs.horizon = K;
  obs.invaded_weights.reserve(K);
  obs.running_max.reserve(K);
  for (std::size_t k = 1; k <= K; ++k) {
    const ExploredVertex& v = ex.step();
    obs.invaded_weights.push_back(v.weight);
    if (v.weight > obs.M_hat) {
      obs.M_hat = v.weight;
      obs.last_max_update_step = k;
    }
    obs.running_max.push_back(obs.M_hat);
  }
  const auto& explored = ex.explored();
  for (std::size_t i = 0; i < obs.last_max_update_step; ++i) obs.first_pond.push_back(explored[i].node);
  obs.censored = static_cast<double>(obs.last_max_update_step) > 0.9 * static_cast<double>(K);
  return obs;
}

ForwardMaxChain forward_max_chain(std::size_t k, KeyedStream& stream) {
  ForwardMaxChain chain;
  chain.M.reserve(k + 1);
  chain.theta.reserve(k + 1);
  double u = stream.uniform();
  double m = survival_inverse(u);
  chain.M.push_back(m);
  chain.theta.push_back(u);
  for (std::size_t i = 0; i < k; ++i) {
    double stay = m * (1.0 - u);
    if (stream.uniform() >= stay) {
      u *= stream.uniform();
      m = survival_inverse(u);
    }
    chain.M.push_back(m);
    chain.theta.push_back(u);
  }
  return chain;
}

std::size_t StructuralCluster::size() const {
  std::size_t total = 0;
  for (const auto& b : branches) total += b.size();
  return total;
}

StructuralCluster structural_ip_sampler(std::size_t k_max, const StructuralCaps& caps,
                                        KeyedStream& stream) {
  StructuralCluster out;
  KeyedStream chain_stream(hash_combine(stream(), hash_string("chain")));
  const std::uint64_t branch_key = hash_combine(stream(), hash_string("branch"));
  out.chain = forward_max_chain(k_max, chain_stream);
  const auto& M = out.chain.M;

  KeyedStream bb_stream(hash_combine(branch_key, hash_string("backbone")));
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (M[k] < M[k - 1]) {
      out.backbone_weights.push_back(M[k - 1]);
      if (!out.first_drop) out.first_drop = k;
    } else {
      out.backbone_weights.push_back(M[k] * bb_stream.uniform());
    }
  }

  std::size_t total = 0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    if (total >= caps.total_size) {
      out.truncated = true;
      break;
    }
    KeyedStream s(hash_key(branch_key, k));
    const double mean = M[k] * (1.0 - out.chain.theta[k]);
    SampledTree t = sample_tree(mean, caps.branch_size, caps.branch_height, s);
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t i = 1; i < w.size(); ++i) w[i] = M[k] * s.uniform();
    total += t.size();
    out.truncated = out.truncated || t.truncated;
    out.branches.push_back(std::move(t));
    out.branch_weights.push_back(std::move(w));
  }

  if (out.first_drop && *out.first_drop <= out.branches.size()) {
    std::size_t pond = 0;
    bool exact = true;
    for (std::size_t k = 0; k < *out.first_drop; ++k) {
      pond += out.branches[k].size();
      exact = exact && !out.branches[k].truncated;
    }
    if (exact) out.pond_size = pond;
  }
  return out;
}

void write_ip_csv_header(std::ostream& os) {
  os << "seed,M_hat,last_max_update_step,pond_size,censored\n";
}

void write_ip_csv_row(std::ostream& os, std::uint64_t seed, const IpObservables& obs) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", obs.M_hat);
  os << seed << ',' << buf << ',' << obs.last_max_update_step << ',' << obs.pond_size() << ','
     << (obs.censored ? 1 : 0) << '\n';
}

}  // namespace fpplab
