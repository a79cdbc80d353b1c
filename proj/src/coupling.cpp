#include "fpplab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fpplab/errors.hpp"
#include "fpplab/random.hpp"

namespace fpplab {

namespace {
constexpr std::uint64_t kFallbackTag = hash_string("coupling-fallback");
}

CouplingSession::CouplingSession(PwitSample& sample, const WeightLaw* law, CouplingOptions options)
    : sample_(sample),
      n_(sample.n()),
      options_(std::move(options)),
      ex_(sample, options_.rule, options_.roots, law,
          ExplorationOptions{.thinning = true,
                             .audit = options_.audit,
                             .prune_thinned = options_.prune_thinned &&
                                              options_.rule.kind == RuleKind::FppTime}),
      N_(n_ + 1, kNever),
      owner_(n_ + 1, 0) {
  const auto& roots = ex_.explored();
  for (std::size_t r = 0; r < roots.size(); ++r) {
    N_[roots[r].mark] = 0;
    owner_[roots[r].mark] = r;
  }
}

std::size_t CouplingSession::N(std::uint32_t i) const {
  if (i < 1 || i > n_) throw DomainError("mark outside [n]");
  return N_[i];
}

void CouplingSession::after_step(const ExploredVertex& v) {
  const std::size_t index = ex_.explored().size() - 1;
  if (!v.thinned) {
    if (N_[v.mark] != kNever)
      throw ConsistencyError("two unthinned vertices carry mark " + std::to_string(v.mark));
    N_[v.mark] = v.step;
    owner_[v.mark] = index;
    ++unthinned_;
    if (options_.audit) audit_step(v);
  }
  if (options_.trace) {
    const auto& parent = ex_.explored()[v.parent];
    char key[48];
    std::snprintf(key, sizeof key, "%.17g",
                  options_.rule.kind == RuleKind::FppTime ? v.time.value() : v.weight);
    trace_.push_back("{\"step\":" + std::to_string(v.step) + ",\"vertex\":\"" +
                     ex_.id_of(index).to_string() + "\",\"edge\":[" +
                     std::to_string(parent.mark) + "," + std::to_string(v.mark) +
                     "],\"key\":" + key + ",\"thinned\":" + (v.thinned ? "true" : "false") + "}");
  }
}

void CouplingSession::audit_step(const ExploredVertex& v) {
  // An unthinned step adjoins V(i_k, i'_k): no earlier sibling carries its mark.
  const auto& parent = ex_.explored()[v.parent];
  for (std::uint32_t k = 1; k < v.child_index; ++k) {
    if (sample_.child_mark(parent.node, k) == v.mark)
      throw ConsistencyError("unthinned step is not the first child with its mark");
  }
}

void CouplingSession::run() {
  for (std::size_t k = 0; k < options_.steps; ++k) after_step(ex_.step());
}

void CouplingSession::run_until_unthinned(std::size_t m, std::size_t max_steps) {
  while (unthinned_ < m && ex_.steps() < max_steps) after_step(ex_.step());
}

double CouplingSession::X(std::uint32_t i, std::uint32_t i_prime) {
  if (N(i) == kNever) throw DomainError("X(i,i') needs mark i to be explored");
  const auto node = ex_.explored()[owner_[i]].node;
  const std::uint32_t cap = 64 * n_;
  for (std::uint32_t k = 1; k <= cap; ++k) {
    if (sample_.child_mark(node, k) == i_prime) return sample_.child_weight(node, k);
  }
  return std::nan("");
}

double CouplingSession::fallback_xi(std::uint32_t i, std::uint32_t j) const {
  const std::uint64_t key = hash_key(sample_.seed(), kFallbackTag, std::min(i, j), std::max(i, j));
  return static_cast<double>(n_) * -std::log(bits_to_open_unit(mix64(key)));
}

CoupledWeights CouplingSession::coupled_weights() {
  const std::size_t stride = n_ + 1;
  auto xi = std::make_shared<std::vector<double>>(stride * stride, 0.0);
  CoupledWeights out;
  out.n = n_;
  auto set = [&](std::uint32_t i, std::uint32_t j, double v) {
    (*xi)[i * stride + j] = v;
    (*xi)[j * stride + i] = v;
  };
  auto fallback = [&](std::uint32_t i, std::uint32_t j) { return fallback_xi(i, j); };

  std::vector<double> first(stride);
  std::vector<char> assigned(stride * stride, 0);
  for (std::uint32_t i = 1; i <= n_; ++i) {
    if (N_[i] == kNever) continue;
    std::size_t needed = 0;
    for (std::uint32_t j = 1; j <= n_; ++j) {
      if (j != i && N_[j] > N_[i]) ++needed;
    }
    std::fill(first.begin(), first.end(), std::nan(""));
    const auto node = ex_.explored()[owner_[i]].node;
    const std::uint32_t cap = 64 * n_;
    for (std::uint32_t k = 1; k <= cap && needed > 0; ++k) {
      const std::uint32_t mark = sample_.child_mark(node, k);
      if (mark == i || N_[mark] <= N_[i] || !std::isnan(first[mark])) continue;
      first[mark] = sample_.child_weight(node, k);
      --needed;
    }
    for (std::uint32_t j = 1; j <= n_; ++j) {
      if (j == i || N_[j] <= N_[i]) continue;
      assigned[i * stride + j] = assigned[j * stride + i] = 1;
      if (std::isnan(first[j])) {
        set(i, j, fallback(i, j));
        ++out.cap_fallback;
      } else {
        set(i, j, first[j]);
        ++out.from_tree;
      }
    }
  }
  for (std::uint32_t i = 1; i <= n_; ++i) {
    for (std::uint32_t j = i + 1; j <= n_; ++j) {
      if (assigned[i * stride + j]) continue;
      if (N_[i] != N_[j]) throw ConsistencyError("pair left unassigned by the coupling");
      set(i, j, fallback(i, j));
      ++out.fallback;
    }
  }
  out.xi = std::move(xi);
  return out;
}

EdgeWeightSource coupled_source(const WeightLaw& law, const CoupledWeights& w) {
  return EdgeWeightSource::coupled(law, w.n, w.xi);
}

SwtCouplingReport verify_swt_coupling(std::uint64_t seed, const WeightFamily& family,
                                      std::uint32_t n, std::size_t m, bool audit) {
  SwtCouplingReport report;
  if (m == 0) {
    report.match = true;
    return report;
  }
  if (m > n - 1) throw DomainError("at most n-1 vertices can be adjoined");
  PwitSample sample(seed, n);
  WeightLaw law(family, n);
  CouplingOptions opt;
  opt.rule = MinimalRule{RuleKind::FppTime};
  opt.roots = {1};
  opt.audit = audit;
  opt.trace = true;
  CouplingSession session(sample, &law, opt);
  session.run_until_unthinned(m, 1000 * static_cast<std::size_t>(n));
  report.exploration_steps = session.exploration().steps();
  report.trace = session.trace();
  if (session.unthinned_steps() < m) return report;

  CoupledWeights w = session.coupled_weights();
  auto growth = swt_prefix(coupled_source(law, w), 1, static_cast<std::uint32_t>(m));

  const auto& ex = session.exploration().explored();
  std::size_t k = 0;
  for (std::size_t idx = 1; idx < ex.size() && k < m; ++idx) {
    const auto& v = ex[idx];
    if (v.thinned) {
      ++report.thinned;
      continue;
    }
    const auto& step = growth[k++];
    const bool same = step.vertex == v.mark && step.parent == ex[v.parent].mark &&
                      step.tau == v.time && w.at(step.parent, step.vertex) == v.weight;
    ++report.compared;
    if (!same && report.first_mismatch == 0) report.first_mismatch = k;
  }
  report.match = report.compared == m && report.first_mismatch == 0;
  return report;
}

bool verify_ip_agreement(std::uint64_t seed, const WeightFamily& family, std::uint32_t n,
                         std::size_t m) {
  PwitSample sample(seed, n);
  WeightLaw law(family, n);
  ExplorationOptions opt{.thinning = false};
  Exploration fpp(sample, MinimalRule{RuleKind::FppTime}, {1}, &law, opt);
  Exploration ip(sample, MinimalRule{RuleKind::IpWeight, SidePolicy::SingleTree, 1}, {1}, nullptr,
                 opt);
  for (std::size_t k = 0; k < m; ++k) {
    if (fpp.step().node != ip.step().node) return false;
  }
  return true;
}

}  // namespace fpplab
