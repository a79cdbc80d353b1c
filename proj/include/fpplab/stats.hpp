#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace fpplab {

double mean(std::span<const double> x);
// Standard error of the mean (sample standard deviation / sqrt(n)).
double standard_error(std::span<const double> x);
// Linear interpolation between order statistics (type 7); `sorted` ascending.
double quantile_sorted(std::span<const double> sorted, double p);
double median(std::vector<double> x);

// sup_x |F_N(x) - F(x)| over both one-sided gaps at every sample point.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// Asymptotic Kolmogorov tail P(D_n > d), with Stephens' small-sample correction.
double kolmogorov_pvalue(double d, double n);

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
TestResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);
// Pearson chi-square against equal cell probabilities.
TestResult chi_square_uniform(std::span<const std::size_t> counts);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct EcdfSummary {
  static constexpr std::array<double, 7> kLevels{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};

  std::vector<double> sorted;
  std::array<double, 7> quantiles{};
  std::string reference;
  double ks = 0.0;  // NaN when no reference was given

  std::size_t size() const { return sorted.size(); }
  nlohmann::json to_json(bool include_sample = false) const;
};

EcdfSummary summarize(std::vector<double> sample, std::string reference = {},
                      const std::function<double(double)>& cdf = {});

}  // namespace fpplab
