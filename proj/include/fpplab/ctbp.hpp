#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fpplab/errors.hpp"
#include "fpplab/pwit.hpp"
#include "fpplab/time.hpp"
#include "fpplab/weights.hpp"

namespace fpplab {

// All quantities below are in units of f_n(1): ages a = t / f_n(1),
// lambda = lambda_n f_n(1) and phi(x) = f_n(x) / f_n(1).

struct Malthusian {
  std::string family;
  double n = 0.0;
  double s_n = 0.0;
  double lambda_scaled = 0.0;  // lambda_n f_n(1)
  double log_lambda = 0.0;     // log lambda_n; lambda_n itself may overflow
  double residual = 0.0;       // mu_hat(lambda) - 1
  std::size_t evaluations = 0;
  int iterations = 0;
};

// mu_hat(lambda) = int_0^inf e^{-lambda phi(x)} dx. Diverges when f_n is
// bounded, so bounded families are rejected.
double laplace_intensity(const WeightLaw& law, double lambda_scaled,
                         std::size_t* evaluations = nullptr);

Malthusian malthusian(const WeightLaw& law);
Malthusian malthusian(const WeightFamily& family, double n);

// Discounted expected future offspring of one vertex of age a:
// h(a) = int_{phi^{-1}(a)}^inf e^{-lambda (phi(x) - a)} dx, with h(0) = 1 at
// the Malthusian lambda. Direct adaptive quadrature.
double discounted_offspring(const WeightLaw& law, double lambda_scaled, double age);
// Sum of h over a set of ages.
double discounted_offspring(const WeightLaw& law, double lambda_scaled,
                            std::span<const double> ages);

// Tabulated h: log h against v = log(lambda a) on a uniform grid, with
// four-point Lagrange interpolation. Quadrature below the grid and the
// large-age form 1 / (lambda phi'(phi^{-1}(a))) above it.
class DiscountKernel {
 public:
  DiscountKernel(const WeightLaw& law, double lambda_scaled, double v_min = -60.0,
                 double v_max = 40.0, double step = 0.01);

  double operator()(double age) const;
  double lambda() const { return lambda_; }
  // h is non-increasing when phi^{-1} is concave, i.e. phi(x) = x^s with s >= 1.
  bool monotone() const { return monotone_; }

 private:
  const WeightLaw* law_;
  double lambda_;
  double v_min_, v_max_, step_;
  bool monotone_;
  std::vector<double> log_h_;
};

struct FrozenVertex {
  PwitSample::NodeRef node = 0;
  Time time;
  std::uint32_t depth = 0;
};

struct FreezeRecord {
  std::array<Time, 2> T_fr;
  Time T_unfr;
  std::array<double, 2> crossing_value{};
  // True when the crossing happened through the jump at a birth.
  std::array<bool, 2> at_birth{};
  std::array<std::vector<FrozenVertex>, 2> cluster;
  std::array<std::size_t, 2> exact_evaluations{};
  std::array<bool, 2> frozen{};
  std::size_t volume = 0;
  std::uint32_t diameter = 0;

  double T_fr_value(int j) const { return T_fr[j - 1].value(); }
  // R_j(t) = (t ^ T_fr^(j)) + ((t - T_unfr) v 0).
  Time on_off(int j, Time t) const;
  // Left-continuous inverse of R_j.
  Time on_off_inverse(int j, Time y) const;
};

// Thrown when a side reaches the birth cap before freezing.
struct FreezeCapError : ExhaustionError {
  FreezeCapError(const std::string& what, FreezeRecord partial)
      : ExhaustionError(what), record(std::move(partial)) {}
  FreezeRecord record;
};

struct FreezeCaps {
  std::size_t max_births = 5000000;
};

// Runs the two single-root FPP processes in time order. Side j stops at the
// first t where the sum of h(t - T_v) over its born vertices reaches s_n.
FreezeRecord run_with_freezing(PwitSample& sample, const WeightLaw& law,
                               const DiscountKernel& kernel, const FreezeCaps& caps = {});

struct FrozenStatsRow {
  double s_n = 0.0;
  std::size_t runs = 0;
  double volume_median = 0.0;  // of |B_fr| / s_n^2
  double volume_q90 = 0.0;
  double diameter_median = 0.0;  // of diameter / s_n
  double diameter_q90 = 0.0;
};

struct FrozenSeries {
  double s_n = 0.0;
  std::vector<std::size_t> volume;
  std::vector<std::uint32_t> diameter;
};

std::vector<FrozenStatsRow> frozen_stats(std::span<const FrozenSeries> series);

struct LuckyVertex {
  PwitSample::NodeRef node = 0;
  Time time;
  std::size_t descendants = 0;  // counted up to the threshold
};

// Number of w with T_{vw} - T_v <= 1, counting v itself, stopped at `cap`.
std::size_t young_descendants(PwitSample& sample, const WeightLaw& law, PwitSample::NodeRef v,
                              std::size_t cap);

// Among the first `horizon` vertices of the FPP exploration from `root`,
// those whose descendants within age f_n(1) number at least R s_n^2.
std::vector<LuckyVertex> detect_lucky(PwitSample& sample, const WeightLaw& law, int root,
                                      double R, std::size_t horizon);

// seed,s_n,n,T_fr1,T_fr2,f_n_inverse_T_fr1,f_n_inverse_T_fr2,volume,diameter
void write_freeze_csv_header(std::ostream& os);
void write_freeze_csv_row(std::ostream& os, std::uint64_t seed, const WeightLaw& law,
                          const FreezeRecord& r);

}  // namespace fpplab
