#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

#include "doctest.h"

#include "fpplab/errors.hpp"
#include "fpplab/pwit.hpp"
#include "fpplab/random.hpp"
#include "fpplab/stats.hpp"

using namespace fpplab;

namespace {

VertexId vid(int root, std::vector<std::uint32_t> path) { return VertexId{root, std::move(path)}; }

void check_mean(const std::vector<double>& x, double expected) {
  CHECK(std::abs(mean(x) - expected) < 3.0 * standard_error(x));
}

}  // namespace

TEST_CASE("vertex ids") {
  auto v = vid(2, {3, 1, 4});
  CHECK(v.depth() == 3);
  CHECK(v.parent() == vid(2, {3, 1}));
  CHECK(v.child(7) == vid(2, {3, 1, 4, 7}));
  CHECK(v.to_string() == "2:3.1.4");
  CHECK(vid(1, {}).to_string() == "1:");
  CHECK(vid(1, {5}) < vid(2, {1}));
  CHECK(vid(1, {1}) < vid(1, {1, 1}));
  CHECK_THROWS_AS(vid(1, {}).parent(), DomainError);
  CHECK_THROWS_AS(v.child(0), DomainError);
}

TEST_CASE("first and third child weights") {
  PwitSample s(31, 100);
  std::vector<double> x1, x3;
  for (std::uint32_t i = 1; i <= 100000; ++i) {
    auto w = s.child_weights(vid(1, {i}), 3);
    x1.push_back(w[0]);
    x3.push_back(w[2]);
  }
  check_mean(x1, 1.0);
  check_mean(x3, 3.0);
  CHECK(ks_test(x1, [](double x) { return -std::expm1(-x); }).p_value > 1e-3);
}

TEST_CASE("child weights are increasing with unit exponential gaps") {
  PwitSample s(32, 10);
  auto w = s.child_weights(vid(2, {4, 4}), 5000);
  std::vector<double> gaps;
  double prev = 0.0;
  for (double x : w) {
    REQUIRE(x > prev);
    gaps.push_back(x - prev);
    prev = x;
  }
  CHECK(ks_test(gaps, [](double x) { return -std::expm1(-x); }).p_value > 1e-3);
}

TEST_CASE("memo extension keeps the prefix") {
  PwitSample s(33, 10);
  auto a = s.child_weights(vid(1, {2}), 5);
  auto b = s.child_weights(vid(1, {2}), 8);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
  auto c = s.child_weights(vid(1, {2}), 40);
  CHECK(std::equal(b.begin(), b.end(), c.begin()));
}

TEST_CASE("children below a threshold") {
  PwitSample s(34, 10);
  std::vector<double> counts;
  std::size_t empty = 0;
  const int R = 100000;
  for (std::uint32_t i = 1; i <= R; ++i) {
    auto below = s.children_below(vid(1, {i}), 1.0);
    counts.push_back(double(below.size()));
    auto all = s.child_weights(vid(1, {i}), below.size() + 1);
    CHECK(std::equal(below.begin(), below.end(), all.begin()));
    CHECK(all.back() > 1.0);
    empty += s.children_below(vid(2, {i}), 0.01).empty();
  }
  check_mean(counts, 1.0);
  const double p = std::exp(-0.01);
  CHECK(std::abs(double(empty) / R - p) < 3.0 * std::sqrt(p * (1 - p) / R));
  CHECK_THROWS_AS(s.children_below(vid(1, {}), 0.0), DomainError);
}

TEST_CASE("marks") {
  PwitSample s(35, 100);
  CHECK(s.mark(vid(1, {})) == 1);
  CHECK(s.mark(vid(2, {})) == 2);
  std::vector<std::size_t> counts(100, 0);
  for (std::uint32_t i = 1; i <= 100000; ++i) {
    const auto m = s.mark(vid(1 + (i & 1), {i, 2}));
    REQUIRE(m >= 1);
    REQUIRE(m <= 100);
    ++counts[m - 1];
  }
  CHECK(chi_square_uniform(counts).p_value > 0.01);
  const auto m = s.mark(vid(1, {9, 9}));
  CHECK(s.mark(vid(1, {9, 9})) == m);
  const auto parent = s.node(vid(1, {9}));
  CHECK(s.child_mark(parent, 9) == m);
}

TEST_CASE("answers do not depend on query order") {
  KeyedStream rng(hash_key(36, 1));
  std::vector<VertexId> queries;
  for (int i = 0; i < 300; ++i) {
    VertexId v{1 + int(rng() % 2), {}};
    const int depth = int(rng() % 4);
    for (int d = 0; d < depth; ++d) v.path.push_back(1 + std::uint32_t(rng() % 20));
    queries.push_back(v);
  }
  for (int trial = 0; trial < 10; ++trial) {
    PwitSample a(77, 50), b(77, 50);
    std::vector<std::size_t> order(queries.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const std::size_t k = 1 + (i * 7919 + trial) % 40;
      b.child_weights(queries[i], k);
      b.mark(queries[i]);
    }
    for (std::size_t i = 0; i < queries.size(); ++i) {
      CHECK(a.child_weights(queries[i], 25) == b.child_weights(queries[i], 25));
      CHECK(a.mark(queries[i]) == b.mark(queries[i]));
    }
  }
  PwitSample c(78, 50), d(77, 50);
  CHECK(c.child_weights(queries[0], 5) != d.child_weights(queries[0], 5));
}

TEST_CASE("sibling first weights are uncorrelated") {
  PwitSample s(37, 10);
  std::vector<double> x, y;
  for (std::uint32_t i = 1; i <= 10000; ++i) {
    x.push_back(s.child_weights(vid(1, {i, 1}), 1)[0]);
    y.push_back(s.child_weights(vid(1, {i, 2}), 1)[0]);
  }
  CHECK(std::abs(pearson_correlation(x, y)) < 0.02);
}

TEST_CASE("node references") {
  PwitSample s(38, 10);
  const auto v = vid(2, {1, 5});
  const auto r = s.node(v);
  CHECK(s.id(r) == v);
  CHECK(s.depth(r) == 2);
  CHECK(s.root_of(r) == 2);
  CHECK(s.node(v) == r);
  CHECK(s.child(s.node(vid(2, {1})), 5) == r);
  CHECK_THROWS_AS(s.root(3), DomainError);
  CHECK_THROWS_AS(PwitSample(1, 1), DomainError);
}

TEST_CASE("subtree export") {
  PwitSample s(39, 10);
  std::vector<PwitSample::NodeRef> v{s.root(1), s.node(vid(1, {2}))};
  auto j = s.subtree_json(v);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["vertex"] == "1:");
  CHECK(j[0]["mark"] == 1);
  CHECK(j[1]["vertex"] == "1:2");
  CHECK(j[1]["weight"].get<double>() == s.child_weights(vid(1, {}), 2)[1]);
  CHECK(j[1]["mark"].get<std::uint32_t>() == s.mark(vid(1, {2})));
}
