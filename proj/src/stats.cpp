#include "fpplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "fpplab/errors.hpp"

namespace fpplab {

double mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double standard_error(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("standard error needs two observations");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double n = static_cast<double>(x.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0,1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, 0.5);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS distance of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_pvalue(double d, double n) {
  if (!(n > 0.0)) throw DomainError("sample size must be positive");
  const double rn = std::sqrt(n);
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sample.size());
  TestResult r;
  r.statistic = ks_distance(std::move(sample), cdf);
  r.p_value = kolmogorov_pvalue(r.statistic, n);
  return r;
}

TestResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  TestResult r;
  r.statistic = ks_two_sample(std::move(a), std::move(b));
  r.p_value = kolmogorov_pvalue(r.statistic, na * nb / (na + nb));
  return r;
}

TestResult chi_square_uniform(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw DomainError("chi-square needs at least two cells");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (!(total > 0.0)) throw DomainError("chi-square needs observations");
  const double expected = total / static_cast<double>(counts.size());
  TestResult r;
  for (std::size_t c : counts) {
    const double diff = static_cast<double>(c) - expected;
    r.statistic += diff * diff / expected;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  r.p_value = boost::math::gamma_q(dof / 2.0, r.statistic / 2.0);
  return r;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("correlation needs paired samples");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

EcdfSummary summarize(std::vector<double> sample, std::string reference,
                      const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("summary of an empty sample");
  EcdfSummary s;
  std::sort(sample.begin(), sample.end());
  s.sorted = std::move(sample);
  for (std::size_t i = 0; i < s.quantiles.size(); ++i)
    s.quantiles[i] = quantile_sorted(s.sorted, EcdfSummary::kLevels[i]);
  s.reference = std::move(reference);
  s.ks = cdf ? ks_distance(s.sorted, cdf) : std::numeric_limits<double>::quiet_NaN();
  return s;
}

nlohmann::json EcdfSummary::to_json(bool include_sample) const {
  nlohmann::json j;
  j["n"] = sorted.size();
  nlohmann::json q = nlohmann::json::object();
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof key, "%g", kLevels[i]);
    q[key] = quantiles[i];
  }
  j["quantiles"] = q;
  if (!reference.empty()) {
    j["reference"] = reference;
    j["ks"] = ks;
  }
  if (include_sample) j["sample"] = sorted;
  return j;
}

}  // namespace fpplab
