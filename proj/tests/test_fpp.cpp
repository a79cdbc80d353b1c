#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "fpplab/errors.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/random.hpp"
#include "fpplab/stats.hpp"
#include "fpplab/weights.hpp"

using namespace fpplab;

namespace {

EdgeWeightSource explicit_graph(std::uint32_t n, const std::vector<std::tuple<int, int, double>>& w) {
  std::vector<double> c((n + 1) * (n + 1), 0.0);
  for (auto [i, j, x] : w) c[i * (n + 1) + j] = c[j * (n + 1) + i] = x;
  return EdgeWeightSource::explicit_costs(n, std::move(c));
}

EdgeWeightSource random_explicit(std::uint32_t n, KeyedStream& rng, double scale = 1.0) {
  std::vector<std::tuple<int, int, double>> w;
  for (std::uint32_t i = 1; i <= n; ++i)
    for (std::uint32_t j = i + 1; j <= n; ++j) w.emplace_back(i, j, scale * rng.exponential());
  return explicit_graph(n, w);
}

double path_cost(const EdgeWeightSource& s, const std::vector<std::uint32_t>& path) {
  double c = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) c += s.cost(path[i - 1], path[i]);
  return c;
}

}  // namespace

TEST_CASE("small instances") {
  auto g3 = explicit_graph(3, {{1, 2, 5.0}, {1, 3, 1.0}, {2, 3, 2.0}});
  auto r = shortest_weight(g3);
  CHECK(r.W.value() == 3.0);
  CHECK(r.H == 2);
  CHECK(r.path == std::vector<std::uint32_t>{1, 3, 2});
  auto b = brute_force(g3);
  CHECK(b.W.value() == 3.0);
  CHECK(b.H == 2);
  CHECK(b.path == std::vector<std::uint32_t>{1, 3, 2});

  auto g2 = explicit_graph(2, {{1, 2, 0.7}});
  auto r2 = shortest_weight(g2);
  CHECK(r2.W.value() == 0.7);
  CHECK(r2.H == 1);
}

TEST_CASE("Dijkstra matches exhaustive enumeration") {
  KeyedStream rng(hash_key(51, 1));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t n = 3 + trial % 5;
    auto g = random_explicit(n, rng);
    auto d = dijkstra_dense(g);
    auto b = brute_force(g);
    REQUIRE(d.path == b.path);
    CHECK(d.W.value() == doctest::Approx(b.W.value()).epsilon(1e-14));
    CHECK(d.H == b.H);
  }
}

TEST_CASE("certified sparse route matches the dense route") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::uint32_t n = seed < 100 ? 6 : 400;
    WeightLaw law(WeightFamily::power_of_exp(1.0 + double(seed % 7) * 5.0), n);
    auto src = EdgeWeightSource::iid(law, seed);
    auto d = dijkstra_dense(src);
    auto c = dijkstra_certified(src, 1, 2, 0.5);
    REQUIRE(d.path == c.path);
    CHECK(d.W == c.W);
    CHECK(c.W.value() <= law.scaled(c.certified_xi));
    if (n <= 8) CHECK(brute_force(src).path == d.path);
  }
}

TEST_CASE("result invariants") {
  KeyedStream rng(hash_key(52, 1));
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_explicit(60, rng);
    DijkstraOptions opt;
    opt.stop_at_target = false;
    opt.record_growth = true;
    auto r = dijkstra_dense(g, opt);
    CHECK(r.path.front() == 1);
    CHECK(r.path.back() == 2);
    CHECK(r.H == r.path.size() - 1);
    CHECK(r.W.value() == doctest::Approx(path_cost(g, r.path)).epsilon(1e-13));
    REQUIRE(r.growth.size() == 59);
    std::set<std::uint32_t> in{1};
    Time prev;
    for (const auto& s : r.growth) {
      CHECK(s.tau >= prev);
      CHECK(in.count(s.parent) == 1);
      CHECK(in.insert(s.vertex).second);
      prev = s.tau;
    }
  }
}

TEST_CASE("scaling all weights scales W and keeps the path") {
  KeyedStream a(hash_key(53, 1)), b(hash_key(53, 1));
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t n = 3 + trial % 6;
    auto g = random_explicit(n, a);
    auto h = random_explicit(n, b, 2.0);
    auto rg = brute_force(g), rh = brute_force(h);
    CHECK(rh.path == rg.path);
    CHECK(rh.W.value() == doctest::Approx(2.0 * rg.W.value()).epsilon(1e-14));
    CHECK(shortest_weight(h).path == shortest_weight(g).path);
  }
}

TEST_CASE("smallest-weight tree prefix") {
  WeightLaw law(WeightFamily::power_of_exp(2.0), 50);
  auto src = EdgeWeightSource::iid(law, 9);
  auto one = swt_prefix(src, 3, 1);
  REQUIRE(one.size() == 1);
  std::uint32_t arg = 0;
  double best = INFINITY;
  for (std::uint32_t j = 1; j <= 50; ++j) {
    if (j == 3) continue;
    if (src.cost(3, j) < best) {
      best = src.cost(3, j);
      arg = j;
    }
  }
  CHECK(one[0].vertex == arg);
  CHECK(one[0].parent == 3);
  CHECK(one[0].tau.value() == best);
  auto many = swt_prefix(src, 3, 30);
  CHECK(many.size() == 30);
  CHECK(many[0].vertex == arg);
  CHECK(swt_prefix(src, 3, 0).empty());
  CHECK_THROWS_AS(swt_prefix(src, 3, 50), DomainError);
}

TEST_CASE("first SWT time has mean n/(n-1) in units of f_n(1)") {
  // s = 1: tau_1 f_n(1) = min of n-1 weights, distributed as f_n(n E/(n-1)).
  const std::uint32_t n = 100;
  WeightLaw law(WeightFamily::power_of_exp(1.0), n);
  std::vector<double> tau;
  for (std::uint64_t seed = 0; seed < 100000; ++seed)
    tau.push_back(swt_prefix(EdgeWeightSource::iid(law, seed), 1, 1)[0].tau.value());
  const double expected = double(n) / (n - 1);
  CHECK(std::abs(mean(tau) - expected) < 3.0 * standard_error(tau));
  CHECK(ks_test(tau, [&](double t) { return -std::expm1(-t * (n - 1) / n); }).p_value > 1e-3);
}

TEST_CASE("order statistics of weights at one vertex") {
  // Sorted costs from vertex 1 against phi(S_{k,n}), S_{k,n} = sum_{j<=k} n E_j/(n-j).
  const std::uint32_t n = 100;
  WeightLaw law(WeightFamily::power_of_exp(3.0), n);
  KeyedStream rng(hash_key(54, 1));
  int good[3] = {0, 0, 0};
  for (int batch = 0; batch < 10; ++batch) {
    std::vector<std::vector<double>> direct(3), oracle(3);
    for (int r = 0; r < 10000; ++r) {
      auto src = EdgeWeightSource::iid(law, hash_key(55, batch, r));
      std::vector<double> c;
      for (std::uint32_t j = 2; j <= n; ++j) c.push_back(src.cost(1, j));
      std::partial_sort(c.begin(), c.begin() + 3, c.end());
      double S = 0.0;
      for (int k = 0; k < 3; ++k) {
        direct[k].push_back(c[k]);
        S += double(n) / double(n - (k + 1)) * rng.exponential();
        oracle[k].push_back(std::pow(S, 3.0));
      }
    }
    for (int k = 0; k < 3; ++k) good[k] += ks_test_two_sample(direct[k], oracle[k]).p_value > 0.01;
  }
  for (int k = 0; k < 3; ++k) CHECK(good[k] >= 9);
}

TEST_CASE("iid source") {
  WeightLaw law(WeightFamily::power_of_exp(4.0), 40);
  auto a = EdgeWeightSource::iid(law, 5), b = EdgeWeightSource::iid(law, 5), c = EdgeWeightSource::iid(law, 6);
  std::size_t differ = 0;
  for (std::uint32_t i = 1; i <= 40; ++i) {
    for (std::uint32_t j = i + 1; j <= 40; ++j) {
      CHECK(a.xi(i, j) == a.xi(j, i));
      CHECK(a.xi(i, j) == b.xi(i, j));
      CHECK(a.cost(i, j) == doctest::Approx(law.scaled(a.xi(i, j))).epsilon(1e-14));
      differ += a.xi(i, j) != c.xi(i, j);
    }
  }
  CHECK(differ == 780);
  CHECK_THROWS_AS(a.xi(3, 3), DomainError);
  CHECK_THROWS_AS(a.xi(0, 3), DomainError);

  std::vector<std::uint32_t> u, v;
  a.pairs_below(20.0, u, v);
  std::set<std::pair<std::uint32_t, std::uint32_t>> got;
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK(u[k] < v[k]);
    CHECK(got.insert({u[k], v[k]}).second);
  }
  std::size_t expected = 0;
  for (std::uint32_t i = 1; i <= 40; ++i)
    for (std::uint32_t j = i + 1; j <= 40; ++j)
      if (a.xi(i, j) < 20.0) {
        ++expected;
        CHECK(got.count({i, j}) == 1);
      }
  CHECK(got.size() == expected);
  // i.i.d. Exp(1)/n scale: xi / n is a unit exponential.
  std::vector<double> e;
  for (std::uint32_t i = 1; i <= 40; ++i)
    for (std::uint32_t j = i + 1; j <= 40; ++j) e.push_back(a.xi(i, j) / 40.0);
  CHECK(ks_test(e, [](double x) { return -std::expm1(-x); }).p_value > 1e-3);
}

TEST_CASE("brute force size limit and explicit validation") {
  KeyedStream rng(hash_key(56, 1));
  CHECK_THROWS_AS(brute_force(random_explicit(9, rng)), SizeError);
  CHECK_THROWS_AS(explicit_graph(3, {{1, 2, 1.0}, {1, 3, 1.0}}), DomainError);
  CHECK_THROWS_AS(random_explicit(3, rng).xi(1, 2), DomainError);
}

TEST_CASE("FPP CSV") {
  WeightLaw law(WeightFamily::power_of_exp(2.0), 20);
  auto r = shortest_weight(EdgeWeightSource::iid(law, 3));
  std::ostringstream os;
  write_fpp_csv_header(os);
  write_fpp_csv_row(os, 3, law, r);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "seed,n,s_n,W_n,f_n_inverse_W_n,H_n");
  CHECK(row.rfind("3,20,2,", 0) == 0);
  CHECK(row.substr(row.rfind(',') + 1) == std::to_string(r.H));
}
