#include "fpplab/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <queue>

#include "fpplab/errors.hpp"
#include "fpplab/numerics.hpp"
#include "fpplab/random.hpp"

namespace fpplab {

namespace {
constexpr std::uint64_t kRowTag = hash_string("fpp-row");
constexpr std::uint64_t kColTag = hash_string("fpp-col");
// Dense Dijkstra is cheaper than repeated pair scans below this size.
constexpr std::uint32_t kCertifiedFrom = 1000;

struct HeapItem {
  Time t;
  std::uint32_t v;
};
struct HeapAfter {
  bool operator()(const HeapItem& a, const HeapItem& b) const {
    if (a.t != b.t) return b.t < a.t;
    return a.v > b.v;
  }
};
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, HeapAfter>;

std::vector<std::uint32_t> trace_path(const std::vector<std::uint32_t>& parent, std::uint32_t s,
                                      std::uint32_t t) {
  std::vector<std::uint32_t> path{t};
  while (path.back() != s) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}
}  // namespace

EdgeWeightSource EdgeWeightSource::iid(const WeightLaw& law, std::uint64_t seed) {
  if (law.n() < 2 || law.n() != std::floor(law.n())) throw DomainError("K_n needs integer n >= 2");
  EdgeWeightSource s;
  s.mode_ = Mode::Iid;
  s.n_ = static_cast<std::uint32_t>(law.n());
  s.law_ = law;
  s.row_key_.resize(s.n_ + 1);
  s.col_salt_.resize(s.n_ + 1);
  for (std::uint32_t i = 1; i <= s.n_; ++i) {
    s.row_key_[i] = hash_key(seed, kRowTag, i);
    s.col_salt_[i] = hash_key(seed, kColTag, i);
  }
  return s;
}

EdgeWeightSource EdgeWeightSource::coupled(const WeightLaw& law, std::uint32_t n,
                                           std::shared_ptr<const std::vector<double>> xi) {
  if (!xi || xi->size() != static_cast<std::size_t>(n + 1) * (n + 1))
    throw DomainError("coupled weights need an (n+1)x(n+1) matrix");
  EdgeWeightSource s;
  s.mode_ = Mode::Coupled;
  s.n_ = n;
  s.law_ = law;
  s.matrix_ = std::move(xi);
  return s;
}

EdgeWeightSource EdgeWeightSource::explicit_costs(std::uint32_t n, std::vector<double> costs) {
  if (n < 2) throw DomainError("K_n needs n >= 2");
  if (costs.size() != static_cast<std::size_t>(n + 1) * (n + 1))
    throw DomainError("explicit costs need an (n+1)x(n+1) matrix");
  for (std::uint32_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = i + 1; j <= n; ++j) {
      double c = costs[i * (n + 1) + j];
      if (!(c > 0.0) || c != costs[j * (n + 1) + i])
        throw DomainError("explicit costs must be positive and symmetric");
    }
  }
  EdgeWeightSource s;
  s.mode_ = Mode::Explicit;
  s.n_ = n;
  s.matrix_ = std::make_shared<const std::vector<double>>(std::move(costs));
  return s;
}

double EdgeWeightSource::iid_xi(std::uint32_t i, std::uint32_t j) const {
  if (i > j) std::swap(i, j);
  std::uint64_t bits = mix64(row_key_[i] ^ col_salt_[j]);
  return -static_cast<double>(n_) * std::log(bits_to_open_unit(bits));
}

double EdgeWeightSource::xi(std::uint32_t i, std::uint32_t j) const {
  if (i == j || i < 1 || j < 1 || i > n_ || j > n_) throw DomainError("not an edge of K_n");
  switch (mode_) {
    case Mode::Iid:
      return iid_xi(i, j);
    case Mode::Coupled:
      return (*matrix_)[static_cast<std::size_t>(i) * (n_ + 1) + j];
    case Mode::Explicit:
      break;
  }
  throw DomainError("explicit sources have no PWIT-scale weights");
}

double EdgeWeightSource::cost(std::uint32_t i, std::uint32_t j) const {
  if (mode_ == Mode::Explicit) return (*matrix_)[static_cast<std::size_t>(i) * (n_ + 1) + j];
  return law_->scaled(xi(i, j));
}

void EdgeWeightSource::pairs_below(double c, std::vector<std::uint32_t>& a,
                                   std::vector<std::uint32_t>& b) const {
  a.clear();
  b.clear();
  if (mode_ == Mode::Explicit) throw DomainError("explicit sources have no PWIT-scale weights");
  if (mode_ == Mode::Coupled) {
    for (std::uint32_t i = 1; i <= n_; ++i) {
      for (std::uint32_t j = i + 1; j <= n_; ++j) {
        if ((*matrix_)[static_cast<std::size_t>(i) * (n_ + 1) + j] < c) {
          a.push_back(i);
          b.push_back(j);
        }
      }
    }
    return;
  }
  // xi < c iff the uniform exceeds e^{-c/n}; the integer screen is slightly
  // loose and every hit is confirmed in floating point.
  const double q = std::exp(-c / n_) * 0x1.0p53 - 0.5;
  const std::uint64_t screen = q > 8.0 ? static_cast<std::uint64_t>(q) - 8 : 0;
  for (std::uint32_t i = 1; i <= n_; ++i) {
    const std::uint64_t rk = row_key_[i];
    for (std::uint32_t j = i + 1; j <= n_; ++j) {
      if ((mix64(rk ^ col_salt_[j]) >> 11) > screen && iid_xi(i, j) < c) {
        a.push_back(i);
        b.push_back(j);
      }
    }
  }
}

FppResult dijkstra_dense(const EdgeWeightSource& source, const DijkstraOptions& opt) {
  const std::uint32_t n = source.n();
  if (opt.source < 1 || opt.source > n || opt.target < 1 || opt.target > n ||
      opt.source == opt.target)
    throw DomainError("source and target must be distinct vertices of K_n");
  FppResult r;
  r.n = n;
  std::vector<Time> dist(n + 1);
  std::vector<char> reached(n + 1, 0), settled(n + 1, 0);
  std::vector<std::uint32_t> parent(n + 1, 0);
  MinHeap heap;
  reached[opt.source] = 1;
  heap.push({Time(), opt.source});
  std::uint32_t count = 0;
  while (!heap.empty()) {
    HeapItem top = heap.top();
    heap.pop();
    const std::uint32_t u = top.v;
    if (settled[u] || top.t != dist[u]) continue;
    settled[u] = 1;
    if (u != opt.source) {
      ++count;
      if (opt.record_growth) r.growth.push_back({count, u, parent[u], dist[u]});
      if (opt.max_settled && count >= *opt.max_settled) break;
      if (opt.stop_at_target && u == opt.target) break;
    }
    for (std::uint32_t v = 1; v <= n; ++v) {
      if (v == u || settled[v]) continue;
      double c = source.cost(u, v);
      if (!std::isfinite(c)) continue;
      Time nd = dist[u] + c;
      if (!reached[v] || nd < dist[v]) {
        reached[v] = 1;
        dist[v] = nd;
        parent[v] = u;
        heap.push({nd, v});
      } else if (nd == dist[v]) {
        ++r.ties;
        if (u < parent[v]) parent[v] = u;
      }
    }
  }
  if (settled[opt.target]) {
    r.W = dist[opt.target];
    r.path = trace_path(parent, opt.source, opt.target);
    r.H = static_cast<std::uint32_t>(r.path.size() - 1);
  }
  return r;
}

FppResult dijkstra_certified(const EdgeWeightSource& source, std::uint32_t s, std::uint32_t t,
                             double c0) {
  if (source.mode() == EdgeWeightSource::Mode::Explicit)
    throw DomainError("certified Dijkstra needs PWIT-scale weights");
  const std::uint32_t n = source.n();
  if (s < 1 || s > n || t < 1 || t > n || s == t)
    throw DomainError("source and target must be distinct vertices of K_n");
  const WeightLaw& law = *source.law();
  std::vector<std::uint32_t> ea, eb;
  int rounds = 0;
  for (double c = c0;; c *= 2.0) {
    ++rounds;
    if (c > 64.0 * n) {
      DijkstraOptions opt;
      opt.source = s;
      opt.target = t;
      FppResult r = dijkstra_dense(source, opt);
      r.rounds = rounds;
      return r;
    }
    source.pairs_below(c, ea, eb);
    std::vector<std::uint32_t> start(n + 2, 0);
    for (std::size_t e = 0; e < ea.size(); ++e) {
      ++start[ea[e] + 1];
      ++start[eb[e] + 1];
    }
    for (std::uint32_t i = 1; i <= n + 1; ++i) start[i] += start[i - 1];
    std::vector<std::uint32_t> adj(start[n + 1]);
    std::vector<double> w(start[n + 1]);
    {
      std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
      for (std::size_t e = 0; e < ea.size(); ++e) {
        double cost = source.cost(ea[e], eb[e]);
        adj[fill[ea[e]]] = eb[e];
        w[fill[ea[e]]++] = cost;
        adj[fill[eb[e]]] = ea[e];
        w[fill[eb[e]]++] = cost;
      }
    }

    FppResult r;
    r.n = n;
    std::vector<Time> dist(n + 1);
    std::vector<char> reached(n + 1, 0), settled(n + 1, 0);
    std::vector<std::uint32_t> parent(n + 1, 0);
    MinHeap heap;
    reached[s] = 1;
    heap.push({Time(), s});
    while (!heap.empty()) {
      HeapItem top = heap.top();
      heap.pop();
      const std::uint32_t u = top.v;
      if (settled[u] || top.t != dist[u]) continue;
      settled[u] = 1;
      if (u == t) break;
      for (std::uint32_t e = start[u]; e < start[u + 1]; ++e) {
        const std::uint32_t v = adj[e];
        if (settled[v] || !std::isfinite(w[e])) continue;
        Time nd = dist[u] + w[e];
        if (!reached[v] || nd < dist[v]) {
          reached[v] = 1;
          dist[v] = nd;
          parent[v] = u;
          heap.push({nd, v});
        } else if (nd == dist[v]) {
          ++r.ties;
          if (u < parent[v]) parent[v] = u;
        }
      }
    }
    if (settled[t] && dist[t] <= Time(law.scaled(c))) {
      r.W = dist[t];
      r.path = trace_path(parent, s, t);
      r.H = static_cast<std::uint32_t>(r.path.size() - 1);
      r.certified_xi = c;
      r.rounds = rounds;
      return r;
    }
  }
}

FppResult shortest_weight(const EdgeWeightSource& source) {
  if (source.mode() != EdgeWeightSource::Mode::Explicit && source.n() >= kCertifiedFrom)
    return dijkstra_certified(source);
  return dijkstra_dense(source);
}

std::vector<SwtStep> swt_prefix(const EdgeWeightSource& source, std::uint32_t src,
                                std::uint32_t m) {
  if (m > source.n() - 1) throw DomainError("the tree has at most n-1 edges");
  if (m == 0) return {};
  DijkstraOptions opt;
  opt.source = src;
  opt.target = src == 1 ? 2 : 1;
  opt.stop_at_target = false;
  opt.record_growth = true;
  opt.max_settled = m;
  return dijkstra_dense(source, opt).growth;
}

BruteForceResult brute_force(const EdgeWeightSource& source) {
  const std::uint32_t n = source.n();
  if (n > 8) throw SizeError("brute force enumeration is limited to n <= 8");
  BruteForceResult best;
  bool found = false;
  std::vector<std::uint32_t> path{1};
  std::uint32_t used = 1u << 1;
  std::function<void(Time)> dfs = [&](Time d) {
    const std::uint32_t u = path.back();
    if (u == 2) {
      if (!found || d < best.W || (d == best.W && path < best.path)) {
        found = true;
        best.W = d;
        best.path = path;
      }
      return;
    }
    for (std::uint32_t v = 1; v <= n; ++v) {
      if (used & (1u << v)) continue;
      used |= 1u << v;
      path.push_back(v);
      dfs(d + source.cost(u, v));
      path.pop_back();
      used &= ~(1u << v);
    }
  };
  dfs(Time());
  best.H = static_cast<std::uint32_t>(best.path.size() - 1);
  return best;
}

void write_fpp_csv_header(std::ostream& os) { os << "seed,n,s_n,W_n,f_n_inverse_W_n,H_n\n"; }

void write_fpp_csv_row(std::ostream& os, std::uint64_t seed, const WeightLaw& law,
                       const FppResult& r) {
  const double w = r.W.value();
  const double log10_raw = std::log10(w) + law.log_f1() / std::numbers::ln10;
  char buf[160];
  std::snprintf(buf, sizeof buf, ",%.17g,%s,%.17g,%u\n", law.s(),
                format_from_log10(log10_raw).c_str(), law.scaled_inverse(w), r.H);
  os << seed << ',' << r.n << buf;
}

}  // namespace fpplab
