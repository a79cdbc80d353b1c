#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fpplab/random.hpp"

namespace fpplab {

enum class FamilyKind { PowerOfExp, LogKappa, DoubleExpAlpha, InvPowerAlpha, PowerOfBase };

// Base law U = h(E) of the U^{s_n} family.
enum class BaseLaw { Uniform, Exponential };

struct BaseSpec {
  BaseLaw law = BaseLaw::Uniform;
  double param = 1.0;  // upper end b for Uniform(0,b), rate for Exponential
};

// Edge weights Y = g(E) with E a unit exponential and g increasing. The
// decreasing parametrizations are stored through E = -log(1 - e^{-E}).
struct WeightFamily {
  FamilyKind kind = FamilyKind::PowerOfExp;
  double rho = 1.0;
  double kappa = 0.5;
  double alpha = 0.5;
  std::optional<double> s_override;
  std::optional<BaseSpec> base_law;

  static WeightFamily power_of_exp(double s);
  static WeightFamily log_kappa(double rho, double kappa);
  static WeightFamily double_exp_alpha(double rho, double alpha);
  static WeightFamily inv_power_alpha(double rho, double alpha);
  static WeightFamily power_of_base(BaseSpec base, double s);

  void validate() const;
  // True when sup g < infinity.
  bool bounded() const;
  std::string id() const;
};

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view name);

nlohmann::json to_json(const WeightFamily& family);
WeightFamily family_from_json(const nlohmann::json& j);

double s_n_of(const WeightFamily& family, double n);
double f_n(const WeightFamily& family, double n, double x);
double f_n_inverse(const WeightFamily& family, double n, double y);
// Same map through monotone bisection on the bracket [1e-12, 10 n], widened
// geometrically; an independent route to the closed forms.
double f_n_inverse_bisect(const WeightFamily& family, double n, double y);
// g(E) for a fresh unit exponential E drawn from the stream.
double sample_edge_weight(const WeightFamily& family, double n, KeyedStream& stream);

// f_n bound to one n, with everything also available in units of f_n(1):
// phi(x) = f_n(x)/f_n(1). Raw f_n(1) underflows doubles for large s_n; the
// scaled form is what the simulations use.
class WeightLaw {
 public:
  WeightLaw(WeightFamily family, double n);

  const WeightFamily& family() const { return family_; }
  double n() const { return n_; }
  double s() const { return s_; }

  double log_f(double x) const;
  double f(double x) const;
  double inverse_from_log(double log_y) const;
  double inverse(double y) const;
  double log_f1() const { return log_f1_; }

  double log_scaled(double x) const;
  double scaled(double x) const;
  double scaled_inverse(double t) const;
  // sup of phi; +inf for unbounded families.
  double scaled_sup() const { return scaled_sup_; }
  // log phi(x0 + y) - log phi(x0), accurate for small y.
  double log_ratio(double x0, double y) const;
  // x d/dx log phi(x), analytic.
  double log_derivative(double x) const;

 private:
  double log_g(double u) const;
  double u_from_log_g(double log_y) const;

  WeightFamily family_;
  double n_;
  double s_;
  double log_f1_;
  double scaled_sup_;
};

struct ConditionTolerances {
  double scaling_rel = 0.10;  // |ratio(x) - x| <= scaling_rel * x
  double delta0 = 0.5;        // small-weight window [1 - delta0, 1]
  double R = 3.0;             // large-weight window [1, R]
  int window_points = 65;
  double fd_step = 1e-6;
};

struct ConditionReport {
  FamilyKind kind = FamilyKind::PowerOfExp;
  std::string family_id;
  double n = 0.0;
  double s_n = 0.0;
  std::vector<double> grid;
  std::vector<double> scaling_ratios;
  std::vector<double> logderiv;
  double epsilon0_est = 0.0;
  double epsilon1_est = 0.0;
  ConditionTolerances tolerances;
  bool scaling_pass = false;
  bool small_weights_pass = false;
  bool large_weights_pass = false;
  std::vector<std::string> notes;

  bool pass() const { return scaling_pass && small_weights_pass && large_weights_pass; }
  nlohmann::json to_json() const;
};

ConditionReport check_conditions(const WeightFamily& family, double n,
                                 const std::vector<double>& grid,
                                 const ConditionTolerances& tol = {});

}  // namespace fpplab
