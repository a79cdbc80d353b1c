#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"

#include "fpplab/ctbp.hpp"
#include "fpplab/errors.hpp"
#include "fpplab/exploration.hpp"
#include "fpplab/stats.hpp"

using namespace fpplab;

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// phi(x) = x^s: h(a) = int_{a^{1/s}}^inf e^{-lambda (x^s - a)} dx
//                    = (1/s) lambda^{-1/s} e^{lambda a} Gamma(1/s, lambda a).
double h_closed_form(double s, double lambda, double a) {
  const double z = lambda * a;
  const double log_upper = std::log(boost::math::gamma_q(1.0 / s, z)) + std::lgamma(1.0 / s);
  return std::exp(z + log_upper - std::log(lambda) / s) / s;
}

// Direct quadrature sum over every explored vertex born by t.
double value_at(const std::vector<FrozenVertex>& born, const WeightLaw& law, double lambda, Time t) {
  double total = 0.0;
  for (const auto& v : born)
    if (v.time <= t) total += discounted_offspring(law, lambda, t - v.time);
  return total;
}

}  // namespace

TEST_CASE("Malthusian parameter of the exponential family") {
  for (double n : {10.0, 1e3, 1e6}) {
    auto m = malthusian(WeightFamily::power_of_exp(1.0), n);
    CHECK(m.lambda_scaled == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.log_lambda == doctest::Approx(std::log(n)).epsilon(1e-12));
  }
}

TEST_CASE("Malthusian parameter against the Gamma closed form") {
  for (double s : {0.5, 2.0, 4.0, 16.0, 64.0, 256.0}) {
    auto m = malthusian(WeightFamily::power_of_exp(s), 1e4);
    CHECK(std::abs(m.lambda_scaled - std::pow(std::tgamma(1.0 + 1.0 / s), s)) < 1e-6);
    CHECK(std::abs(m.residual) < 1e-8);
  }
  auto big = malthusian(WeightFamily::power_of_exp(256.0), 1e4);
  CHECK(std::abs(big.lambda_scaled - std::exp(-kEulerGamma)) < 0.02);
}

TEST_CASE("mu_hat equals one at lambda for the unbounded families") {
  for (double n : {1e2, 1e4}) {
    for (double s : {4.0, 64.0}) {
      for (const auto& fam : {WeightFamily::power_of_exp(s),
                              WeightFamily::power_of_base({BaseLaw::Exponential, 2.0}, s)}) {
        WeightLaw law(fam, n);
        auto m = malthusian(law);
        CHECK(std::abs(laplace_intensity(law, m.lambda_scaled) - 1.0) < 1e-8);
      }
    }
  }
  // Bounded weights make mu_hat infinite.
  CHECK_THROWS_AS(malthusian(WeightFamily::inv_power_alpha(1.0, 0.5), 1e4), DomainError);
  CHECK_THROWS_AS(malthusian(WeightFamily::log_kappa(1.0, 0.5), 1e4), DomainError);
}

TEST_CASE("Laplace intensity against its closed form") {
  // int_0^inf e^{-lambda x^s} dx = Gamma(1 + 1/s) lambda^{-1/s}.
  for (double s : {1.0, 3.0, 32.0}) {
    WeightLaw law(WeightFamily::power_of_exp(s), 1000);
    for (double lambda : {0.01, 0.7, 5.0, 300.0})
      CHECK(laplace_intensity(law, lambda) ==
            doctest::Approx(std::tgamma(1.0 + 1.0 / s) * std::pow(lambda, -1.0 / s)).epsilon(1e-11));
  }
}

TEST_CASE("discounted offspring of single vertices") {
  WeightLaw law(WeightFamily::power_of_exp(6.0), 1e4);
  const double lambda = malthusian(law).lambda_scaled;
  CHECK(discounted_offspring(law, lambda, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  std::vector<double> zeros(7, 0.0);
  CHECK(discounted_offspring(law, lambda, zeros) == doctest::Approx(7.0).epsilon(1e-10));

  // s = 1: h(a) = 1/lambda for every age.
  WeightLaw exp1(WeightFamily::power_of_exp(1.0), 100);
  for (double lam : {0.5, 1.0, 3.0})
    for (double a : {0.0, 1e-6, 0.3, 2.0, 40.0})
      CHECK(discounted_offspring(exp1, lam, a) == doctest::Approx(1.0 / lam).epsilon(1e-11));

  for (double s : {2.0, 6.0, 32.0}) {
    WeightLaw w(WeightFamily::power_of_exp(s), 1e4);
    const double lam = malthusian(w).lambda_scaled;
    for (double a : {1e-5, 0.01, 0.5, 1.0, 3.0, 50.0, 400.0})
      CHECK(discounted_offspring(w, lam, a) == doctest::Approx(h_closed_form(s, lam, a)).epsilon(1e-9));
  }
}

TEST_CASE("tabulated kernel") {
  for (double s : {1.0, 4.0, 32.0}) {
    WeightLaw law(WeightFamily::power_of_exp(s), 1e4);
    const double lam = malthusian(law).lambda_scaled;
    DiscountKernel h(law, lam);
    CHECK(h.monotone());
    CHECK(h(0.0) == 1.0);
    double prev = INFINITY;
    for (double v = -70.0; v < 50.0; v += 0.37) {
      const double a = std::exp(v) / lam;
      const double x = h(a);
      CHECK(x <= prev * (1.0 + 1e-12));
      prev = x;
      if (v < 6.0) CHECK(x == doctest::Approx(h_closed_form(s, lam, a)).epsilon(1e-8));
    }
    // Large ages: h(a) ~ 1/(lambda phi'(phi^{-1}(a))) = a^{1/s - 1} / (lambda s).
    const double a = std::exp(45.0) / lam;
    CHECK(h(a) == doctest::Approx(std::pow(a, 1.0 / s - 1.0) / (lam * s)).epsilon(1e-6));
  }
  WeightLaw sub(WeightFamily::power_of_exp(0.5), 1e4);
  CHECK_FALSE(DiscountKernel(sub, malthusian(sub).lambda_scaled).monotone());
}

TEST_CASE("freezing crossings, replay and on-off clocks") {
  for (double s : {4.0, 8.0}) {
    WeightLaw law(WeightFamily::power_of_exp(s), 1e6);
    const double lam = malthusian(law).lambda_scaled;
    DiscountKernel h(law, lam);
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      PwitSample sample(hash_key(61, seed), 1000000);
      auto rec = run_with_freezing(sample, law, h);
      CHECK(rec.T_unfr == std::max(rec.T_fr[0], rec.T_fr[1]));
      CHECK(rec.volume == rec.cluster[0].size() + rec.cluster[1].size());
      CHECK(rec.volume >= 2);
      for (int j = 1; j <= 2; ++j) {
        const auto& born = rec.cluster[j - 1];
        const Time T = rec.T_fr[j - 1];
        CHECK(rec.frozen[j - 1]);
        CHECK(rec.crossing_value[j - 1] >= s * (1.0 - 1e-9));
        CHECK(rec.crossing_value[j - 1] <= s + 1.0 + 1e-9);

        // Independent check of the crossing with direct quadrature.
        const double at = value_at(born, law, lam, T);
        CHECK(at >= s * (1.0 - 1e-7));
        CHECK(at <= s + 1.0 + 1e-7);
        if (rec.at_birth[j - 1]) CHECK(at - 1.0 < s);
        else CHECK(at == doctest::Approx(s).epsilon(1e-7));
        // h is non-increasing, so the value peaks right after births.
        for (const auto& v : born) {
          if (!(v.time < T)) continue;
          CHECK(value_at(born, law, lam, v.time) < s);
        }

        // Replay: the plain FPP exploration stopped at T_fr.
        PwitSample fresh(hash_key(61, seed), 1000000);
        Exploration ex(fresh, MinimalRule{RuleKind::FppTime}, {j}, &law, ExplorationOptions{.thinning = false});
        std::vector<std::string> replay{fresh.id(ex.explored()[0].node).to_string()};
        while (ex.peek_time() <= T) replay.push_back(fresh.id(ex.step().node).to_string());
        std::vector<std::string> frozen;
        for (const auto& v : born) frozen.push_back(sample.id(v.node).to_string());
        CHECK(frozen == replay);

        // R_j runs, halts at T_fr until T_unfr, then runs again.
        const Time a = lerp(Time(), T, 0.5);
        CHECK(rec.on_off(j, a) == a);
        CHECK(rec.on_off(j, rec.T_unfr) == T);
        const Time later = rec.T_unfr + 2.5;
        CHECK((rec.on_off(j, later) - T) == doctest::Approx(2.5).epsilon(1e-12));
        CHECK((rec.on_off_inverse(j, rec.on_off(j, later)) - later) == doctest::Approx(0.0));
        CHECK(rec.on_off_inverse(j, a) == a);
      }
    }
  }
}

TEST_CASE("birth cap reports a partial record") {
  WeightLaw law(WeightFamily::power_of_exp(32.0), 1e6);
  DiscountKernel h(law, malthusian(law).lambda_scaled);
  PwitSample sample(5, 1000000);
  FreezeCaps caps;
  caps.max_births = 10;
  try {
    run_with_freezing(sample, law, h, caps);
    FAIL("expected the birth cap to trigger");
  } catch (const FreezeCapError& e) {
    CHECK(e.record.volume >= 10);
    CHECK_FALSE((e.record.frozen[0] && e.record.frozen[1]));
  }
}

TEST_CASE("frozen stats") {
  std::vector<FrozenSeries> series{{4.0, {16, 32, 48}, {4, 8, 12}}, {8.0, {64, 128, 640}, {8, 8, 24}}};
  auto rows = frozen_stats(series);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].volume_median == 2.0);
  CHECK(rows[0].diameter_median == 2.0);
  CHECK(rows[1].volume_median == 2.0);
  CHECK(rows[1].diameter_median == 1.0);
  CHECK(rows[1].volume_q90 == doctest::Approx(2.0 + 0.8 * 8.0));
  CHECK(rows[1].runs == 3);
  CHECK_THROWS_AS(frozen_stats(std::span<const FrozenSeries>(series.data(), 1)), DomainError);
}

TEST_CASE("young descendants against enumeration") {
  WeightLaw law(WeightFamily::power_of_exp(3.0), 1e6);
  std::function<std::size_t(PwitSample&, const VertexId&, double)> count =
      [&](PwitSample& s, const VertexId& v, double budget) {
        std::size_t c = 1;
        for (std::uint32_t k = 1;; ++k) {
          const double w = std::pow(s.child_weights(v, k)[k - 1], 3.0);
          if (w > budget) break;
          c += count(s, v.child(k), budget - w);
        }
        return c;
      };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    PwitSample s(seed, 1000000);
    const auto v = VertexId{1, {1 + std::uint32_t(seed % 3)}};
    const std::size_t expect = count(s, v, 1.0);
    CHECK(young_descendants(s, law, s.node(v), 1u << 30) == expect);
    CHECK(young_descendants(s, law, s.node(v), 5) == std::min<std::size_t>(expect, 5));
  }
}

TEST_CASE("lucky vertices") {
  const double s = 8.0;
  WeightLaw law(WeightFamily::power_of_exp(s), 1e6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PwitSample a(seed, 1000000), b(seed, 1000000);
    auto strict = detect_lucky(a, law, 1, 1.0, 300);
    auto loose = detect_lucky(b, law, 1, 0.25, 300);
    std::vector<std::string> loose_ids;
    for (const auto& v : loose) loose_ids.push_back(b.id(v.node).to_string());
    for (const auto& v : strict) {
      CHECK(double(v.descendants) >= s * s);
      CHECK(std::count(loose_ids.begin(), loose_ids.end(), a.id(v.node).to_string()) == 1);
    }
    // A vertex with no young descendants counts only itself.
    PwitSample c(seed, 1000000);
    for (const auto& v : detect_lucky(c, law, 1, 1.5 / (s * s), 300)) CHECK(v.descendants >= 2);
  }
  PwitSample d(1, 10);
  CHECK_THROWS_AS(detect_lucky(d, law, 1, 0.0, 10), DomainError);
}

TEST_CASE("probability that the root is lucky decays like 1/s") {
  for (double s : {8.0, 16.0, 32.0}) {
    WeightLaw law(WeightFamily::power_of_exp(s), 1e6);
    const int R = 20000;
    int lucky = 0;
    for (int r = 0; r < R; ++r) {
      PwitSample p(hash_key(62, r, int(s)), 1000000);
      lucky += !detect_lucky(p, law, 1, 1.0, 1).empty();
    }
    const double scaled = s * double(lucky) / R;
    MESSAGE("s=" << s << " s*P(root is 1-lucky)=" << scaled);
    CHECK(scaled >= 0.15);
    CHECK(scaled <= 1.0);
  }
}

TEST_CASE("freeze CSV") {
  WeightLaw law(WeightFamily::power_of_exp(4.0), 1e6);
  DiscountKernel h(law, malthusian(law).lambda_scaled);
  PwitSample sample(3, 1000000);
  auto rec = run_with_freezing(sample, law, h);
  std::ostringstream os;
  write_freeze_csv_header(os);
  write_freeze_csv_row(os, 3, law, rec);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "seed,s_n,n,T_fr1,T_fr2,f_n_inverse_T_fr1,f_n_inverse_T_fr2,volume,diameter");
  CHECK(row.rfind("3,4,1000000,", 0) == 0);
  CHECK(row.substr(row.rfind(',') + 1) == std::to_string(rec.diameter));
}
