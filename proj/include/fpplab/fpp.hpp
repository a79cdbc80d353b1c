#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "fpplab/time.hpp"
#include "fpplab/weights.hpp"

namespace fpplab {

// Edge weights of K_n on vertices 1..n. Iid and Coupled carry the PWIT-scale
// value xi_e = n E_e, so Y_e = f_n(xi_e) and the cost added along a path is
// phi(xi_e) = Y_e / f_n(1). Explicit holds costs directly (test instances).
class EdgeWeightSource {
 public:
  enum class Mode { Iid, Coupled, Explicit };

  static EdgeWeightSource iid(const WeightLaw& law, std::uint64_t seed);
  // `xi` is a row-major (n+1)x(n+1) symmetric matrix; row and column 0 unused.
  static EdgeWeightSource coupled(const WeightLaw& law, std::uint32_t n,
                                  std::shared_ptr<const std::vector<double>> xi);
  // Same layout as `coupled`, holding the costs themselves.
  static EdgeWeightSource explicit_costs(std::uint32_t n, std::vector<double> costs);

  Mode mode() const { return mode_; }
  std::uint32_t n() const { return n_; }
  const WeightLaw* law() const { return law_ ? &*law_ : nullptr; }

  // PWIT-scale weight; not available in Explicit mode.
  double xi(std::uint32_t i, std::uint32_t j) const;
  double cost(std::uint32_t i, std::uint32_t j) const;
  // Every pair {i,j} with xi < c, each once with i < j. Iid and Coupled only.
  void pairs_below(double c, std::vector<std::uint32_t>& a, std::vector<std::uint32_t>& b) const;

 private:
  EdgeWeightSource() = default;
  double iid_xi(std::uint32_t i, std::uint32_t j) const;

  Mode mode_ = Mode::Iid;
  std::uint32_t n_ = 0;
  std::optional<WeightLaw> law_;
  std::vector<std::uint64_t> row_key_, col_salt_;
  std::shared_ptr<const std::vector<double>> matrix_;
};

struct SwtStep {
  std::uint32_t k = 0;
  std::uint32_t vertex = 0;
  std::uint32_t parent = 0;  // other endpoint of the adjoining edge
  Time tau;
};

struct FppResult {
  std::uint32_t n = 0;
  Time W;                          // in units of f_n(1) for Iid/Coupled
  std::uint32_t H = 0;
  std::vector<std::uint32_t> path;  // 1, ..., 2
  std::vector<SwtStep> growth;      // from the source, when recorded
  std::size_t ties = 0;             // equal tentative distances seen
  // Sparse route only: final threshold c with W <= phi(c), and the number of rounds.
  double certified_xi = 0.0;
  int rounds = 0;
};

struct DijkstraOptions {
  std::uint32_t source = 1;
  std::uint32_t target = 2;
  bool stop_at_target = true;
  bool record_growth = false;
  // Stop after this many vertices beyond the source are settled (growth runs).
  std::optional<std::uint32_t> max_settled;
};

// Binary-heap Dijkstra relaxing all n-1 edges of each settled vertex.
FppResult dijkstra_dense(const EdgeWeightSource& source, const DijkstraOptions& opt = {});

// Dijkstra on the edges with xi < c, starting at c = c0 and doubling c until
// d(source, target) <= phi(c). Any path through an omitted edge costs at least
// phi(c), so the answer is the exact shortest path of K_n.
FppResult dijkstra_certified(const EdgeWeightSource& source, std::uint32_t source_vertex = 1,
                             std::uint32_t target = 2, double c0 = 8.0);

// Shortest 1 -> 2 path; the certified route for large Iid/Coupled instances.
FppResult shortest_weight(const EdgeWeightSource& source);

// First m vertices adjoined to the smallest-weight tree of `src`.
std::vector<SwtStep> swt_prefix(const EdgeWeightSource& source, std::uint32_t src, std::uint32_t m);

struct BruteForceResult {
  Time W;
  std::uint32_t H = 0;
  std::vector<std::uint32_t> path;
};

// Minimum over all simple 1 -> 2 paths; n <= 8.
BruteForceResult brute_force(const EdgeWeightSource& source);

// seed,n,s_n,W_n,f_n_inverse_W_n,H_n with W_n printed in raw units.
void write_fpp_csv_header(std::ostream& os);
void write_fpp_csv_row(std::ostream& os, std::uint64_t seed, const WeightLaw& law,
                       const FppResult& r);

}  // namespace fpplab
