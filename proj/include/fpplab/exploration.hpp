#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpplab/pwit.hpp"
#include "fpplab/time.hpp"
#include "fpplab/weights.hpp"

namespace fpplab {

enum class RuleKind { FppTime, IpWeight, IpLexicographic };
enum class SidePolicy { Alternate, SingleTree };

struct MinimalRule {
  RuleKind kind = RuleKind::FppTime;
  // Only consulted by the IP rules when both roots are present.
  SidePolicy side = SidePolicy::Alternate;
  int single_tree_root = 1;
};

struct ExploredVertex {
  PwitSample::NodeRef node = 0;
  int root = 1;
  std::size_t step = 0;  // N_v
  std::size_t parent = npos;
  std::uint32_t child_index = 0;
  std::uint32_t depth = 0;
  double weight = 0.0;  // X_v, zero for roots
  Time time;            // T_v = sum of phi(X) along the path, in units of f_n(1)
  std::uint32_t mark = 0;
  bool thinned = false;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct ExplorationOptions {
  bool thinning = true;
  // Re-checks the lazy-frontier and minimal-rule invariants at every step.
  bool audit = false;
  // FppTime only: thinned vertices are adjoined but their children are never
  // offered. Every descendant of a thinned vertex is thinned, and under the
  // global time order they do not change which unthinned vertex comes next or
  // the relative order of unthinned steps.
  bool prune_thinned = false;
};

// Minimal-rule exploration of one or two PWITs. Every explored vertex keeps
// only its next unexplored child on the frontier: children come in increasing
// weight order and all three rule keys are monotone in the child index, so
// the rule's minimum over the infinite boundary is always among these.
class Exploration {
 public:
  // `law` supplies phi for arrival times; required for FppTime.
  Exploration(PwitSample& sample, MinimalRule rule, std::vector<int> roots,
              const WeightLaw* law = nullptr, ExplorationOptions options = {});

  Exploration(const Exploration&) = delete;
  Exploration& operator=(const Exploration&) = delete;

  const ExploredVertex& step();
  void run(std::size_t m);
  // Arrival time of the vertex the next FppTime step would adjoin.
  Time peek_time() const;

  const std::vector<ExploredVertex>& explored() const { return explored_; }
  std::size_t steps() const { return steps_; }
  std::size_t tie_events() const { return ties_; }
  const MinimalRule& rule() const { return rule_; }
  const std::vector<int>& roots() const { return roots_; }
  PwitSample& sample() { return sample_; }
  VertexId id_of(std::size_t index) const { return sample_.id(explored_[index].node); }
  // Explored index of the unthinned vertex carrying mark i, if any.
  std::optional<std::size_t> owner_of(std::uint32_t mark) const;

 private:
  struct Candidate {
    Time time;
    double weight = 0.0;
    std::size_t parent = 0;
    std::uint32_t k = 0;
  };

  bool before(const Candidate& a, const Candidate& b) const;
  int compare_lex(const Candidate& a, const Candidate& b) const;
  int compare_branches(const Candidate& a, const Candidate& b) const;
  VertexId candidate_id(const Candidate& c) const;
  Candidate make_candidate(std::size_t parent, std::uint32_t k);
  void push(int root_slot, Candidate c);
  Candidate pop(int root_slot);
  int choose_side() const;
  std::size_t adjoin(std::size_t parent, std::uint32_t k, PwitSample::NodeRef node, double w,
                     Time t);
  void audit(const Candidate& chosen, int side) const;

  PwitSample& sample_;
  MinimalRule rule_;
  std::vector<int> roots_;
  const WeightLaw* law_;
  ExplorationOptions options_;
  std::vector<ExploredVertex> explored_;
  std::vector<std::vector<Candidate>> heaps_;  // one binary heap per root
  std::vector<std::vector<double>> ordered_;   // descending path weights (IpLexicographic)
  std::unordered_map<std::uint32_t, std::size_t> mark_owner_;
  std::size_t steps_ = 0;
  mutable std::size_t ties_ = 0;
};

// Edges {M_{p(v)}, M_v} over unthinned non-root explored vertices.
struct InducedGraph {
  std::vector<std::uint32_t> vertices;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

InducedGraph induced_subgraph(const Exploration& state);

// step,vertex,weight,mark,time,thinned
void write_trace_csv(std::ostream& os, const Exploration& state);

}  // namespace fpplab
