#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "fpplab/errors.hpp"
#include "fpplab/ip.hpp"
#include "fpplab/pgw.hpp"
#include "fpplab/random.hpp"
#include "fpplab/stats.hpp"

using namespace fpplab;

namespace {

constexpr std::size_t kPondCensor = 200;

// Shared by the M_hat and pond checks: 10^4 IP runs of 2000 steps.
struct DirectRuns {
  std::vector<double> M_hat;
  std::vector<double> pond;
  std::vector<std::size_t> pond_size;
};

const DirectRuns& direct_runs() {
  static const DirectRuns runs = [] {
    DirectRuns r;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      PwitSample s(hash_key(41, i), 1000);
      auto obs = ip_observables(s, 1, 2000);
      r.M_hat.push_back(obs.M_hat);
      r.pond.push_back(double(std::min(obs.pond_size(), kPondCensor)));
      r.pond_size.push_back(obs.pond_size());
    }
    return r;
  }();
  return runs;
}

}  // namespace

TEST_CASE("M_hat follows theta") {
  const auto& r = direct_runs();
  // M > 1 is a statement about the whole invasion. A run still inside a
  // near-critical first pond has a running max creeping up to 1 from below,
  // so at a finite horizon only P(M_hat <= 1) -> theta(1) = 0 is checkable.
  const double below = double(std::count_if(r.M_hat.begin(), r.M_hat.end(),
                                             [](double m) { return m <= 1.0; })) /
                       double(r.M_hat.size());
  MESSAGE("fraction of runs with M_hat <= 1 at step 2000: " << below);
  CHECK(below < 0.02);
  for (double x : {1.2, 1.5, 2.0, 3.0}) {
    const double ecdf =
        double(std::count_if(r.M_hat.begin(), r.M_hat.end(), [x](double m) { return m <= x; })) /
        double(r.M_hat.size());
    CHECK(std::abs(ecdf - survival_probability(x)) < 0.02);
  }
  CHECK(ks_distance(r.M_hat, [](double x) { return survival_probability(x); }) < 0.02);
  // Against the analytic sampler as well.
  KeyedStream rng(hash_key(42, 1));
  std::vector<double> analytic(10000);
  for (auto& m : analytic) m = sample_M(rng);
  CHECK(ks_two_sample(r.M_hat, analytic) < 0.03);
}

TEST_CASE("first pond quantiles are finite") {
  auto sizes = direct_runs().pond_size;
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes.front() >= 1);
  CHECK(sizes[sizes.size() / 2] < 2000);
  MESSAGE("median first pond size " << sizes[sizes.size() / 2]);
}

TEST_CASE("first pond is a rooted subtree invaded before the outlet") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    PwitSample s(seed, 1000);
    auto obs = ip_observables(s, 2, 500);
    REQUIRE(obs.pond_size() == obs.last_max_update_step);
    CHECK(obs.first_pond.front() == s.root(2));
    std::set<VertexId> pond;
    for (auto v : obs.first_pond) pond.insert(s.id(v));
    for (const auto& v : pond) {
      if (v.depth() > 0) CHECK(pond.count(v.parent()) == 1);
    }
    for (std::size_t k = 0; k + 1 < obs.last_max_update_step; ++k) CHECK(obs.invaded_weights[k] < obs.M_hat);
    CHECK(obs.invaded_weights[obs.last_max_update_step - 1] == obs.M_hat);
    for (std::size_t k = 1; k < obs.running_max.size(); ++k) CHECK(obs.running_max[k] >= obs.running_max[k - 1]);
    CHECK(obs.censored == (obs.last_max_update_step > 450));
  }
  PwitSample s(1, 10);
  CHECK_THROWS_AS(ip_observables(s, 1, 0), DomainError);
}

TEST_CASE("forward maximum chain") {
  CHECK(std::abs(2.0 * (1.0 - survival_probability(2.0)) - 0.406376) < 1e-6);
  KeyedStream rng(hash_key(43, 1));
  std::vector<double> scaled;
  std::vector<double> jump_u;
  double stays = 0.0, expected = 0.0, var = 0.0;
  for (int r = 0; r < 10000; ++r) {
    auto c = forward_max_chain(200, rng);
    REQUIRE(c.M.size() == 201);
    for (std::size_t k = 0; k < c.M.size(); ++k) {
      REQUIRE(c.M[k] > 1.0);
      CHECK(c.theta[k] == doctest::Approx(survival_probability(c.M[k])).epsilon(1e-9));
    }
    for (std::size_t k = 1; k < c.M.size(); ++k) {
      REQUIRE(c.M[k] <= c.M[k - 1]);
      const double m = c.M[k - 1];
      const double p = m * (1.0 - survival_probability(m));
      expected += p;
      var += p * (1.0 - p);
      if (c.M[k] == m) {
        stays += 1.0;
      } else if (jump_u.size() < 100000) {
        jump_u.push_back(survival_probability(c.M[k]) / survival_probability(m));
      }
    }
    scaled.push_back(200.0 * (c.M.back() - 1.0));
  }
  CHECK(std::abs(stays - expected) / std::sqrt(var) < 4.0);
  CHECK(ks_test(jump_u, [](double u) { return std::clamp(u, 0.0, 1.0); }).p_value > 1e-3);
  const double mu = mean(scaled);
  CHECK(mu >= 0.9);
  CHECK(mu <= 1.1);
}

TEST_CASE("structural sampler support and backbone weights") {
  KeyedStream rng(hash_key(44, 1));
  for (int r = 0; r < 2000; ++r) {
    auto c = structural_ip_sampler(20, StructuralCaps{}, rng);
    REQUIRE(c.branches.size() == 21);
    const auto& M = c.chain.M;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
      for (double w : std::vector<double>(c.branch_weights[k].begin() + 1, c.branch_weights[k].end()))
        CHECK((w >= 0.0 && w <= M[k]));
    }
    for (std::size_t k = 1; k <= 20; ++k) {
      if (M[k] < M[k - 1]) CHECK(c.backbone_weights[k - 1] == M[k - 1]);
      else CHECK(c.backbone_weights[k - 1] <= M[k]);
    }
    if (c.first_drop && c.pond_size) {
      std::size_t pond = 0;
      for (std::size_t k = 0; k < *c.first_drop; ++k) pond += c.branches[k].size();
      CHECK(*c.pond_size == pond);
    }
  }
}

TEST_CASE("structural branch sizes follow the dual progeny law") {
  // P(|tau_k| = j) = E[ P_{mhat(M_k)}(|tau| = j) ].
  KeyedStream rng(hash_key(45, 1));
  const int R = 100000;
  const int K = 5, J = 6;
  std::vector<std::vector<double>> count(K + 1, std::vector<double>(J + 1, 0.0));
  std::vector<std::vector<double>> oracle = count;
  for (int r = 0; r < R; ++r) {
    auto c = structural_ip_sampler(K, StructuralCaps{}, rng);
    for (int k = 0; k <= K; ++k) {
      const double md = c.chain.M[k] * (1.0 - survival_probability(c.chain.M[k]));
      const auto size = c.branches[k].size();
      for (int j = 1; j <= J; ++j) {
        oracle[k][j] += total_progeny_pmf(md, j).value;
        if (size == std::size_t(j)) count[k][j] += 1.0;
      }
    }
  }
  for (int k = 0; k <= K; ++k) {
    for (int j = 1; j <= J; ++j) {
      const double p = oracle[k][j] / R;
      const double se = std::sqrt(p * (1 - p) / R);
      CHECK(std::abs(count[k][j] / R - p) < 3.0 * se);
    }
  }
}

TEST_CASE("structural and direct ponds agree") {
  // Pond sizes are censored at 200: the structural sampler stops once 5000
  // vertices exist and the direct runs stop after 2000 steps.
  KeyedStream rng(hash_key(46, 1));
  StructuralCaps caps;
  caps.branch_size = 5000;
  caps.total_size = 5000;
  std::vector<double> structural;
  for (int r = 0; r < 10000; ++r) {
    auto c = structural_ip_sampler(kPondCensor, caps, rng);
    std::size_t pond = 0;
    const std::size_t stop = c.first_drop ? *c.first_drop : c.branches.size();
    for (std::size_t k = 0; k < stop && k < c.branches.size() && pond < kPondCensor; ++k)
      pond += c.branches[k].size();
    structural.push_back(double(std::min(pond, kPondCensor)));
  }
  CHECK(ks_two_sample(structural, direct_runs().pond) < 0.05);
}

TEST_CASE("IP CSV row") {
  PwitSample s(7, 100);
  auto obs = ip_observables(s, 1, 50);
  std::ostringstream os;
  write_ip_csv_header(os);
  write_ip_csv_row(os, 7, obs);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "seed,M_hat,last_max_update_step,pond_size,censored");
  CHECK(row.rfind("7,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 4);
}
