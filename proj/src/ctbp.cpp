#include "fpplab/ctbp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>

#include "fpplab/exploration.hpp"
#include "fpplab/numerics.hpp"
#include "fpplab/stats.hpp"

namespace fpplab {

namespace {

// Exponent levels c where lambda * (phi(x) - a) = c; the integrands are
// below e^{-50} past the last one.
constexpr double kLevels[] = {1e-4, 1e-3, 0.01, 0.1, 0.3, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0};

void require_unbounded(const WeightLaw& law) {
  if (law.family().bounded())
    throw DomainError("mu_hat diverges for families with bounded weights: " + law.family().id());
}

bool power_like(const WeightFamily& f) {
  return f.kind == FamilyKind::PowerOfExp ||
         (f.kind == FamilyKind::PowerOfBase && f.base_law &&
          f.base_law->law == BaseLaw::Exponential);
}

}  // namespace

double laplace_intensity(const WeightLaw& law, double lambda, std::size_t* evaluations) {
  require_unbounded(law);
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  std::vector<double> breaks{0.0};
  for (double c : kLevels) breaks.push_back(law.scaled_inverse(c / lambda));
  auto integrand = [&](double x) { return x > 0.0 ? std::exp(-lambda * law.scaled(x)) : 1.0; };
  Integral r = integrate_panels(integrand, breaks, 1e-13);
  if (evaluations) *evaluations += r.evaluations;
  return r.value;
}

Malthusian malthusian(const WeightLaw& law) {
  require_unbounded(law);
  Malthusian m;
  m.family = law.family().id();
  m.n = law.n();
  m.s_n = law.s();
  auto excess = [&](double lambda) { return laplace_intensity(law, lambda, &m.evaluations) - 1.0; };
  // mu_hat is decreasing in lambda.
  double lo = 0.01, hi = 100.0;
  while (excess(lo) < 0.0) {
    hi = lo;
    lo /= 10.0;
    if (lo < 1e-300) throw NumericError("no Malthusian root: mu_hat stays below 1");
  }
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 10.0;
    if (hi > 1e300) throw NumericError("no Malthusian root: mu_hat stays above 1");
  }
  double llo = std::log(lo), lhi = std::log(hi);
  for (m.iterations = 0; m.iterations < 200 && lhi - llo > 1e-15; ++m.iterations) {
    double mid = 0.5 * (llo + lhi);
    if (excess(std::exp(mid)) > 0.0) llo = mid;
    else lhi = mid;
  }
  m.lambda_scaled = std::exp(0.5 * (llo + lhi));
  m.residual = excess(m.lambda_scaled);
  m.log_lambda = std::log(m.lambda_scaled) - law.log_f1();
  if (!(std::abs(m.residual) < 1e-8))
    throw NumericError("Malthusian residual " + std::to_string(m.residual) + " for " + m.family);
  return m;
}

Malthusian malthusian(const WeightFamily& family, double n) {
  return malthusian(WeightLaw(family, n));
}

double discounted_offspring(const WeightLaw& law, double lambda, double age) {
  require_unbounded(law);
  if (!(age >= 0.0)) throw DomainError("ages must be non-negative");
  if (age == 0.0) return laplace_intensity(law, lambda);
  if (!power_like(law.family()))
    throw DomainError("discounted offspring needs phi(x) = x^s");
  // x = x0 + y; phi(x) - a = a expm1(log phi(x0 + y) - log phi(x0)).
  const double x0 = law.scaled_inverse(age);
  const double la = lambda * age;
  std::vector<double> breaks{0.0};
  for (double c : kLevels) breaks.push_back(x0 * std::expm1(std::log1p(c / la) / law.s()));
  auto integrand = [&](double y) { return std::exp(-la * std::expm1(law.log_ratio(x0, y))); };
  Integral r = integrate_panels(integrand, breaks, 1e-13);
  return r.value;
}

double discounted_offspring(const WeightLaw& law, double lambda, std::span<const double> ages) {
  double total = 0.0;
  for (double a : ages) total += discounted_offspring(law, lambda, a);
  return total;
}

DiscountKernel::DiscountKernel(const WeightLaw& law, double lambda, double v_min, double v_max,
                               double step)
    : law_(&law), lambda_(lambda), v_min_(v_min), v_max_(v_max), step_(step) {
  require_unbounded(law);
  if (!(v_max > v_min) || !(step > 0.0)) throw DomainError("invalid kernel grid");
  monotone_ = power_like(law.family()) && law.s() >= 1.0;
  const std::size_t points = static_cast<std::size_t>(std::llround((v_max - v_min) / step)) + 1;
  log_h_.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double age = std::exp(v_min + static_cast<double>(k) * step) / lambda;
    log_h_[k] = std::log(discounted_offspring(law, lambda, age));
  }
}

double DiscountKernel::operator()(double age) const {
  if (!(age >= 0.0)) throw DomainError("ages must be non-negative");
  if (age == 0.0) return 1.0;
  const double v = std::log(lambda_ * age);
  if (v < v_min_) return discounted_offspring(*law_, lambda_, age);
  if (v > v_max_) {
    const double x0 = law_->scaled_inverse(age);
    return x0 / (lambda_ * age * law_->log_derivative(x0));
  }
  const double u = (v - v_min_) / step_;
  const std::size_t last = log_h_.size() - 1;
  std::size_t i = std::min(static_cast<std::size_t>(u), last);
  std::size_t base = i == 0 ? 0 : std::min(i - 1, last - 3);
  double result = 0.0;
  for (std::size_t p = 0; p < 4; ++p) {
    double w = 1.0;
    for (std::size_t q = 0; q < 4; ++q) {
      if (q != p) w *= (u - static_cast<double>(base + q)) / (static_cast<double>(p) - static_cast<double>(q));
    }
    result += w * log_h_[base + p];
  }
  return std::exp(result);
}

Time FreezeRecord::on_off(int j, Time t) const {
  const Time& fr = T_fr[j - 1];
  if (t <= fr) return t;
  if (t <= T_unfr) return fr;
  return fr + (t - T_unfr);
}

Time FreezeRecord::on_off_inverse(int j, Time y) const {
  const Time& fr = T_fr[j - 1];
  if (y <= fr) return y;
  return T_unfr + (y - fr);
}

namespace {

struct Side {
  std::unique_ptr<Exploration> ex;
  Time t_e;            // last exact evaluation
  double D_e = 1.0;    // value just after t_e
  std::size_t since = 0;
  double discounted_births = 0.0;  // sum of e^{-lambda (b - t_e)} over later births
  bool frozen = false;
};

double exact_value(const Exploration& ex, const DiscountKernel& h, Time t) {
  double total = 0.0;
  for (const auto& v : ex.explored()) total += h(t - v.time);
  return total;
}

void finish(FreezeRecord& rec, const std::array<Side, 2>& sides) {
  rec.volume = 0;
  rec.diameter = 0;
  for (int j = 0; j < 2; ++j) {
    rec.cluster[j].clear();
    rec.frozen[j] = sides[j].frozen;
    for (const auto& v : sides[j].ex->explored()) {
      rec.cluster[j].push_back({v.node, v.time, v.depth});
      rec.diameter = std::max(rec.diameter, v.depth);
    }
    rec.volume += rec.cluster[j].size();
  }
  rec.T_unfr = std::max(rec.T_fr[0], rec.T_fr[1], [](const Time& a, const Time& b) { return a < b; });
}

}  // namespace

FreezeRecord run_with_freezing(PwitSample& sample, const WeightLaw& law,
                               const DiscountKernel& h, const FreezeCaps& caps) {
  const double s = law.s();
  const double lambda = h.lambda();
  FreezeRecord rec;
  std::array<Side, 2> sides;
  for (int j = 0; j < 2; ++j) {
    sides[j].ex = std::make_unique<Exploration>(sample, MinimalRule{RuleKind::FppTime},
                                                std::vector<int>{j + 1}, &law,
                                                ExplorationOptions{.thinning = false});
    // The root alone contributes h(0) = 1.
    if (1.0 >= s) {
      sides[j].frozen = true;
      rec.T_fr[j] = Time();
      rec.crossing_value[j] = 1.0;
      rec.at_birth[j] = true;
    }
  }

  while (!(sides[0].frozen && sides[1].frozen)) {
    int j = sides[0].frozen ? 1 : 0;
    if (!sides[0].frozen && !sides[1].frozen && sides[1].ex->peek_time() < sides[0].ex->peek_time())
      j = 1;
    Side& side = sides[j];
    Exploration& ex = *side.ex;
    if (ex.explored().size() >= caps.max_births) {
      finish(rec, sides);
      throw FreezeCapError("side " + std::to_string(j + 1) + " reached the birth cap before freezing",
                           rec);
    }

    const Time next = ex.peek_time();
    const double dt = next - side.t_e;
    // Upper bound on the value just after the next birth: h(a + d) <= e^{lambda d} h(a),
    // and h(a + d) <= h(a) when h is monotone; the new vertex adds h(0) = 1.
    double bound = std::exp(lambda * dt) * (side.D_e + side.discounted_births) + 1.0;
    if (h.monotone()) bound = std::min(bound, side.D_e + static_cast<double>(side.since) + 1.0);
    if (bound < s) {
      ex.step();
      ++side.since;
      side.discounted_births += std::exp(-lambda * dt);
      continue;
    }

    ++rec.exact_evaluations[j];
    const double before = exact_value(ex, h, next);
    if (before >= s) {
      // Crossed between births: the value just after the previous birth was below s.
      Time lo = ex.explored().back().time, hi = next;
      for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        Time mid = lerp(lo, hi, 0.5);
        if (!(lo < mid && mid < hi)) break;
        if (exact_value(ex, h, mid) >= s) hi = mid;
        else lo = mid;
      }
      side.frozen = true;
      rec.T_fr[j] = hi;
      rec.crossing_value[j] = exact_value(ex, h, hi);
      rec.at_birth[j] = false;
      continue;
    }
    ex.step();
    if (before + 1.0 >= s) {
      side.frozen = true;
      rec.T_fr[j] = next;
      rec.crossing_value[j] = before + 1.0;
      rec.at_birth[j] = true;
    } else {
      side.t_e = next;
      side.D_e = before + 1.0;
      side.since = 0;
      side.discounted_births = 0.0;
    }
  }
  finish(rec, sides);
  return rec;
}

std::vector<FrozenStatsRow> frozen_stats(std::span<const FrozenSeries> series) {
  if (series.size() < 2) throw DomainError("frozen_stats needs at least two grid points");
  std::vector<FrozenStatsRow> rows;
  for (const auto& s : series) {
    if (s.volume.empty() || s.volume.size() != s.diameter.size())
      throw DomainError("each grid point needs paired volume and diameter samples");
    std::vector<double> vol, diam;
    for (std::size_t i = 0; i < s.volume.size(); ++i) {
      vol.push_back(static_cast<double>(s.volume[i]) / (s.s_n * s.s_n));
      diam.push_back(static_cast<double>(s.diameter[i]) / s.s_n);
    }
    std::sort(vol.begin(), vol.end());
    std::sort(diam.begin(), diam.end());
    rows.push_back({s.s_n, vol.size(), quantile_sorted(vol, 0.5), quantile_sorted(vol, 0.9),
                    quantile_sorted(diam, 0.5), quantile_sorted(diam, 0.9)});
  }
  return rows;
}

std::size_t young_descendants(PwitSample& sample, const WeightLaw& law, PwitSample::NodeRef v,
                              std::size_t cap) {
  std::size_t count = 1;
  if (count >= cap) return count;
  // Remaining age budget per pending vertex, in units of f_n(1).
  std::vector<std::pair<PwitSample::NodeRef, double>> stack{{v, 1.0}};
  while (!stack.empty()) {
    auto [u, budget] = stack.back();
    stack.pop_back();
    for (std::uint32_t k = 1;; ++k) {
      const double c = law.scaled(sample.child_weight(u, k));
      if (c > budget) break;
      if (++count >= cap) return count;
      stack.emplace_back(sample.child(u, k), budget - c);
    }
  }
  return count;
}

std::vector<LuckyVertex> detect_lucky(PwitSample& sample, const WeightLaw& law, int root,
                                      double R, std::size_t horizon) {
  if (!(R > 0.0)) throw DomainError("R must be positive");
  const double threshold = R * law.s() * law.s();
  const auto cap = static_cast<std::size_t>(std::ceil(threshold));
  Exploration ex(sample, MinimalRule{RuleKind::FppTime}, {root}, &law,
                 ExplorationOptions{.thinning = false});
  if (horizon > 1) ex.run(horizon - 1);
  std::vector<LuckyVertex> out;
  for (std::size_t i = 0; i < ex.explored().size() && i < horizon; ++i) {
    const auto& v = ex.explored()[i];
    std::size_t c = young_descendants(sample, law, v.node, cap);
    if (static_cast<double>(c) >= threshold) out.push_back({v.node, v.time, c});
  }
  return out;
}

void write_freeze_csv_header(std::ostream& os) {
  os << "seed,s_n,n,T_fr1,T_fr2,f_n_inverse_T_fr1,f_n_inverse_T_fr2,volume,diameter\n";
}

void write_freeze_csv_row(std::ostream& os, std::uint64_t seed, const WeightLaw& law,
                          const FreezeRecord& r) {
  auto raw = [&](int j) {
    const double t = r.T_fr_value(j);
    if (!(t > 0.0)) return std::string("0");
    return format_from_log10(std::log10(t) + law.log_f1() / std::numbers::ln10);
  };
  auto inv = [&](int j) {
    const double t = r.T_fr_value(j);
    return t > 0.0 ? law.scaled_inverse(t) : 0.0;
  };
  char buf[320];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%s,%s,%.17g,%.17g,%zu,%u\n",
                static_cast<unsigned long long>(seed), law.s(), law.n(), raw(1).c_str(),
                raw(2).c_str(), inv(1), inv(2), r.volume, r.diameter);
  os << buf;
}

}  // namespace fpplab
