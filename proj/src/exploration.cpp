#include "fpplab/exploration.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "fpplab/errors.hpp"

namespace fpplab {

Exploration::Exploration(PwitSample& sample, MinimalRule rule, std::vector<int> roots,
                         const WeightLaw* law, ExplorationOptions options)
    : sample_(sample), rule_(rule), roots_(std::move(roots)), law_(law), options_(options) {
  if (roots_.empty() || roots_.size() > 2) throw DomainError("explorations start from 1 or 2 roots");
  if (roots_.size() == 2 && roots_[0] == roots_[1]) throw DomainError("roots must be distinct");
  for (int j : roots_) {
    if (j != 1 && j != 2) throw DomainError("root tag must be 1 or 2");
  }
  if (rule_.kind == RuleKind::FppTime && law_ == nullptr)
    throw DomainError("the FPP rule needs a weight law");
  if (rule_.side == SidePolicy::SingleTree &&
      std::find(roots_.begin(), roots_.end(), rule_.single_tree_root) == roots_.end())
    throw DomainError("single-tree side must be one of the roots");
  if (options_.prune_thinned && (rule_.kind != RuleKind::FppTime || !options_.thinning))
    throw DomainError("pruning thinned subtrees needs the FPP rule with thinning");

  heaps_.resize(roots_.size());
  for (std::size_t slot = 0; slot < roots_.size(); ++slot) {
    int j = roots_[slot];
    ExploredVertex r;
    r.node = sample_.root(j);
    r.root = j;
    r.mark = static_cast<std::uint32_t>(j);
    explored_.push_back(r);
    ordered_.emplace_back();
    mark_owner_[r.mark] = explored_.size() - 1;
  }
  for (std::size_t slot = 0; slot < roots_.size(); ++slot) {
    push(static_cast<int>(slot), make_candidate(slot, 1));
  }
}

Exploration::Candidate Exploration::make_candidate(std::size_t parent, std::uint32_t k) {
  Candidate c;
  c.parent = parent;
  c.k = k;
  c.weight = sample_.child_weight(explored_[parent].node, k);
  if (law_ != nullptr) c.time = explored_[parent].time + law_->scaled(c.weight);
  return c;
}

VertexId Exploration::candidate_id(const Candidate& c) const {
  return sample_.id(explored_[c.parent].node).child(c.k);
}

int Exploration::compare_lex(const Candidate& a, const Candidate& b) const {
  // O(v): path weights sorted in decreasing order; the candidate's own weight
  // is merged into its parent's vector on the fly.
  const auto& pa = ordered_[a.parent];
  const auto& pb = ordered_[b.parent];
  auto at = [](const std::vector<double>& p, double w, std::size_t i) {
    std::size_t pos = static_cast<std::size_t>(
        std::find_if(p.begin(), p.end(), [w](double x) { return x < w; }) - p.begin());
    if (i < pos) return p[i];
    if (i == pos) return w;
    return p[i - 1];
  };
  std::size_t la = pa.size() + 1, lb = pb.size() + 1;
  for (std::size_t i = 0; i < std::min(la, lb); ++i) {
    double x = at(pa, a.weight, i), y = at(pb, b.weight, i);
    if (x < y) return -1;
    if (x > y) return 1;
  }
  return la < lb ? -1 : (la > lb ? 1 : 0);
}

int Exploration::compare_branches(const Candidate& a, const Candidate& b) const {
  // Sums of phi below the common ancestor. The shared prefix can be large
  // enough to absorb both remainders even in double-double.
  Time ra = Time() + law_->scaled(a.weight), rb = Time() + law_->scaled(b.weight);
  std::size_t u = a.parent, v = b.parent;
  while (u != v) {
    const std::uint32_t du = explored_[u].depth, dv = explored_[v].depth;
    if (du >= dv) {
      ra = ra + law_->scaled(explored_[u].weight);
      u = explored_[u].parent;
    }
    if (dv >= du) {
      rb = rb + law_->scaled(explored_[v].weight);
      v = explored_[v].parent;
    }
    if (u == ExploredVertex::npos || v == ExploredVertex::npos) break;
  }
  if (ra < rb) return -1;
  if (rb < ra) return 1;
  return 0;
}

bool Exploration::before(const Candidate& a, const Candidate& b) const {
  switch (rule_.kind) {
    case RuleKind::FppTime:
      if (a.time.hi != b.time.hi) return a.time.hi < b.time.hi;
      if (int c = compare_branches(a, b); c != 0) return c < 0;
      break;
    case RuleKind::IpWeight:
      if (a.weight != b.weight) return a.weight < b.weight;
      break;
    case RuleKind::IpLexicographic:
      if (int c = compare_lex(a, b); c != 0) return c < 0;
      break;
  }
  if (a.parent == b.parent && a.k == b.k) return false;
  ++ties_;
  return candidate_id(a) < candidate_id(b);
}

void Exploration::push(int slot, Candidate c) {
  auto& h = heaps_[slot];
  h.push_back(c);
  std::push_heap(h.begin(), h.end(), [this](const Candidate& a, const Candidate& b) {
    return before(b, a);
  });
}

Exploration::Candidate Exploration::pop(int slot) {
  auto& h = heaps_[slot];
  if (h.empty()) throw ExhaustionError("exploration frontier is empty");
  std::pop_heap(h.begin(), h.end(), [this](const Candidate& a, const Candidate& b) {
    return before(b, a);
  });
  Candidate c = h.back();
  h.pop_back();
  return c;
}

int Exploration::choose_side() const {
  if (roots_.size() == 1) return 0;
  if (rule_.kind == RuleKind::FppTime) {
    return before(heaps_[1].front(), heaps_[0].front()) ? 1 : 0;
  }
  if (rule_.side == SidePolicy::SingleTree) return roots_[0] == rule_.single_tree_root ? 0 : 1;
  return static_cast<int>(steps_ % 2);
}

Time Exploration::peek_time() const {
  if (law_ == nullptr) throw DomainError("arrival times need a weight law");
  int side = roots_.size() == 1 ? 0 : (heaps_[1].front().time < heaps_[0].front().time ? 1 : 0);
  return heaps_[side].front().time;
}

std::size_t Exploration::adjoin(std::size_t parent, std::uint32_t k, PwitSample::NodeRef node,
                                double w, Time t) {
  const ExploredVertex& p = explored_[parent];
  ExploredVertex v;
  v.node = node;
  v.root = p.root;
  v.step = steps_ + 1;
  v.parent = parent;
  v.child_index = k;
  v.depth = p.depth + 1;
  v.weight = w;
  v.time = t;
  bool parent_thinned = p.thinned;
  const std::size_t idx = explored_.size();
  if (options_.thinning) {
    v.mark = sample_.mark(node);
    auto it = mark_owner_.find(v.mark);
    v.thinned = parent_thinned || it != mark_owner_.end();
    if (!v.thinned) mark_owner_.emplace(v.mark, idx);
  }
  explored_.push_back(v);
  if (rule_.kind == RuleKind::IpLexicographic) {
    std::vector<double> o = ordered_[parent];
    o.insert(std::find_if(o.begin(), o.end(), [w](double x) { return x < w; }), w);
    ordered_.push_back(std::move(o));
  } else {
    ordered_.emplace_back();
  }
  return idx;
}

void Exploration::audit(const Candidate& chosen, int side) const {
  // Siblings before the chosen child must already be explored, so no sibling
  // of smaller weight (whatever its mark) has been passed over.
  std::uint32_t explored_children = 0;
  for (const auto& v : explored_) {
    if (v.parent == chosen.parent) ++explored_children;
  }
  if (explored_children != chosen.k - 1)
    throw ConsistencyError("lazy frontier skipped an earlier sibling");
  for (std::size_t s = 0; s < heaps_.size(); ++s) {
    if (rule_.kind != RuleKind::FppTime && static_cast<int>(s) != side) continue;
    for (const auto& c : heaps_[s]) {
      if (before(c, chosen)) throw ConsistencyError("exploration did not pick the rule minimum");
    }
  }
}

const ExploredVertex& Exploration::step() {
  const int side = choose_side();
  Candidate c = pop(side);
  if (options_.audit) audit(c, side);
  PwitSample::NodeRef node = sample_.child(explored_[c.parent].node, c.k);
  std::size_t idx = adjoin(c.parent, c.k, node, c.weight, c.time);
  ++steps_;
  push(side, make_candidate(c.parent, c.k + 1));
  if (!(options_.prune_thinned && explored_[idx].thinned)) push(side, make_candidate(idx, 1));
  return explored_[idx];
}

void Exploration::run(std::size_t m) {
  for (std::size_t i = 0; i < m; ++i) step();
}

std::optional<std::size_t> Exploration::owner_of(std::uint32_t mark) const {
  auto it = mark_owner_.find(mark);
  if (it == mark_owner_.end()) return std::nullopt;
  return it->second;
}

InducedGraph induced_subgraph(const Exploration& state) {
  InducedGraph g;
  const auto& ex = state.explored();
  for (const auto& v : ex) {
    if (v.thinned) continue;
    if (v.mark == 0) throw DomainError("induced subgraph needs an exploration with thinning");
    g.vertices.push_back(v.mark);
    if (v.parent != ExploredVertex::npos) g.edges.emplace_back(ex[v.parent].mark, v.mark);
  }
  return g;
}

void write_trace_csv(std::ostream& os, const Exploration& state) {
  os << "step,vertex,weight,mark,time,thinned\n";
  char buf[96];
  const auto& ex = state.explored();
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto& v = ex[i];
    std::snprintf(buf, sizeof buf, ",%.17g,%u,%.17g,%d\n", v.weight, v.mark, v.time.value(),
                  v.thinned ? 1 : 0);
    os << v.step << ',' << state.id_of(i).to_string() << buf;
  }
}

}  // namespace fpplab
