#include "fpplab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpplab/errors.hpp"

namespace fpplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// u -> -log(1 - e^{-u}); an involution on (0, inf).
double flip(double u) {
  if (u < 0.6931471805599453) return -std::log(-std::expm1(-u));
  return -std::log1p(-std::exp(-u));
}

bool power_like(const WeightFamily& f) {
  return f.kind == FamilyKind::PowerOfExp ||
         (f.kind == FamilyKind::PowerOfBase && f.base_law &&
          f.base_law->law == BaseLaw::Exponential);
}

}  // namespace

WeightFamily WeightFamily::power_of_exp(double s) {
  WeightFamily f;
  f.kind = FamilyKind::PowerOfExp;
  f.s_override = s;
  f.validate();
  return f;
}

WeightFamily WeightFamily::log_kappa(double rho, double kappa) {
  WeightFamily f;
  f.kind = FamilyKind::LogKappa;
  f.rho = rho;
  f.kappa = kappa;
  f.validate();
  return f;
}

WeightFamily WeightFamily::double_exp_alpha(double rho, double alpha) {
  WeightFamily f;
  f.kind = FamilyKind::DoubleExpAlpha;
  f.rho = rho;
  f.alpha = alpha;
  f.validate();
  return f;
}

WeightFamily WeightFamily::inv_power_alpha(double rho, double alpha) {
  WeightFamily f;
  f.kind = FamilyKind::InvPowerAlpha;
  f.rho = rho;
  f.alpha = alpha;
  f.validate();
  return f;
}

WeightFamily WeightFamily::power_of_base(BaseSpec base, double s) {
  WeightFamily f;
  f.kind = FamilyKind::PowerOfBase;
  f.base_law = base;
  f.s_override = s;
  f.validate();
  return f;
}

void WeightFamily::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("rho must be positive");
  switch (kind) {
    case FamilyKind::PowerOfExp:
      if (!s_override || !(*s_override > 0.0) || !std::isfinite(*s_override))
        throw DomainError("PowerOfExp needs a positive s");
      break;
    case FamilyKind::LogKappa:
      if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0,1)");
      break;
    case FamilyKind::DoubleExpAlpha:
    case FamilyKind::InvPowerAlpha:
      if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
      break;
    case FamilyKind::PowerOfBase:
      if (!s_override || !(*s_override > 0.0) || !std::isfinite(*s_override))
        throw DomainError("PowerOfBase needs a positive s");
      if (!base_law) throw DomainError("PowerOfBase needs a base law");
      if (!(base_law->param > 0.0) || !std::isfinite(base_law->param))
        throw DomainError("base law parameter must be positive");
      break;
  }
}

bool WeightFamily::bounded() const {
  switch (kind) {
    case FamilyKind::PowerOfExp: return false;
    case FamilyKind::PowerOfBase: return base_law && base_law->law == BaseLaw::Uniform;
    default: return true;
  }
}

std::string WeightFamily::id() const {
  std::ostringstream os;
  os.precision(10);
  os << to_string(kind) << '(';
  switch (kind) {
    case FamilyKind::PowerOfExp: os << "s=" << *s_override; break;
    case FamilyKind::LogKappa: os << "rho=" << rho << ",kappa=" << kappa; break;
    case FamilyKind::DoubleExpAlpha:
    case FamilyKind::InvPowerAlpha: os << "rho=" << rho << ",alpha=" << alpha; break;
    case FamilyKind::PowerOfBase:
      os << "s=" << *s_override << ",base="
         << (base_law->law == BaseLaw::Uniform ? "Uniform" : "Exponential") << ':'
         << base_law->param;
      break;
  }
  os << ')';
  return os.str();
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::PowerOfExp: return "PowerOfExp";
    case FamilyKind::LogKappa: return "LogKappa";
    case FamilyKind::DoubleExpAlpha: return "DoubleExpAlpha";
    case FamilyKind::InvPowerAlpha: return "InvPowerAlpha";
    case FamilyKind::PowerOfBase: return "PowerOfBase";
  }
  return "?";
}

FamilyKind family_kind_from_string(std::string_view name) {
  for (auto k : {FamilyKind::PowerOfExp, FamilyKind::LogKappa, FamilyKind::DoubleExpAlpha,
                 FamilyKind::InvPowerAlpha, FamilyKind::PowerOfBase}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown weight family: " + std::string(name));
}

nlohmann::json to_json(const WeightFamily& f) {
  nlohmann::json j;
  j["kind"] = to_string(f.kind);
  j["rho"] = f.rho;
  j["kappa"] = f.kappa;
  j["alpha"] = f.alpha;
  if (f.s_override) j["s"] = *f.s_override;
  if (f.base_law) {
    j["base"] = {{"law", f.base_law->law == BaseLaw::Uniform ? "Uniform" : "Exponential"},
                 {"param", f.base_law->param}};
  }
  return j;
}

WeightFamily family_from_json(const nlohmann::json& j) {
  WeightFamily f;
  f.kind = family_kind_from_string(j.at("kind").get<std::string>());
  f.rho = j.value("rho", 1.0);
  f.kappa = j.value("kappa", 0.5);
  f.alpha = j.value("alpha", 0.5);
  if (j.contains("s") && j["s"].is_number()) f.s_override = j["s"].get<double>();
  if (j.contains("base")) {
    BaseSpec b;
    auto law = j["base"].value("law", std::string("Uniform"));
    if (law == "Uniform") b.law = BaseLaw::Uniform;
    else if (law == "Exponential") b.law = BaseLaw::Exponential;
    else throw DomainError("unknown base law: " + law);
    b.param = j["base"].value("param", 1.0);
    f.base_law = b;
  }
  f.validate();
  return f;
}

double s_n_of(const WeightFamily& family, double n) {
  family.validate();
  switch (family.kind) {
    case FamilyKind::PowerOfExp:
    case FamilyKind::PowerOfBase: return *family.s_override;
    case FamilyKind::LogKappa:
      if (!(n >= 2.0)) throw DomainError("s_n needs n >= 2");
      return std::pow(std::log(n), 1.0 / family.kappa - 1.0) /
             (family.kappa * std::pow(family.rho, 1.0 / family.kappa));
    case FamilyKind::DoubleExpAlpha:
    case FamilyKind::InvPowerAlpha: return family.rho * std::pow(n, family.alpha);
  }
  return 0.0;
}

WeightLaw::WeightLaw(WeightFamily family, double n) : family_(std::move(family)), n_(n) {
  family_.validate();
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("n must be at least 1");
  s_ = s_n_of(family_, std::max(n, 2.0));
  log_f1_ = log_f(1.0);
  switch (family_.kind) {
    case FamilyKind::PowerOfExp: scaled_sup_ = kInf; break;
    case FamilyKind::LogKappa:
    case FamilyKind::InvPowerAlpha: scaled_sup_ = std::exp(-log_f1_); break;
    case FamilyKind::DoubleExpAlpha:
      scaled_sup_ = std::exp(-family_.rho / family_.alpha - log_f1_);
      break;
    case FamilyKind::PowerOfBase:
      scaled_sup_ = family_.base_law->law == BaseLaw::Uniform
                        ? std::exp(s_ * std::log(family_.base_law->param) - log_f1_)
                        : kInf;
      break;
  }
}

double WeightLaw::log_g(double u) const {
  const auto& f = family_;
  switch (f.kind) {
    case FamilyKind::PowerOfExp: return s_ * std::log(u);
    case FamilyKind::LogKappa: return -std::pow(flip(u) / f.rho, 1.0 / f.kappa);
    case FamilyKind::DoubleExpAlpha: return -(f.rho / f.alpha) * std::exp(f.alpha * flip(u));
    case FamilyKind::InvPowerAlpha: return -(f.rho / f.alpha) * std::pow(u, -f.alpha);
    case FamilyKind::PowerOfBase:
      if (f.base_law->law == BaseLaw::Uniform)
        return s_ * (std::log(f.base_law->param) + std::log(-std::expm1(-u)));
      return s_ * (std::log(u) - std::log(f.base_law->param));
  }
  return 0.0;
}

double WeightLaw::u_from_log_g(double ly) const {
  const auto& f = family_;
  switch (f.kind) {
    case FamilyKind::PowerOfExp: return std::exp(ly / s_);
    case FamilyKind::LogKappa:
      if (!(ly < 0.0)) throw RangeError("value outside the range of f_n");
      return flip(f.rho * std::pow(-ly, f.kappa));
    case FamilyKind::DoubleExpAlpha: {
      double t = -f.alpha * ly / f.rho;
      if (!(t > 1.0)) throw RangeError("value outside the range of f_n");
      return flip(std::log(t) / f.alpha);
    }
    case FamilyKind::InvPowerAlpha:
      if (!(ly < 0.0)) throw RangeError("value outside the range of f_n");
      return std::pow(-f.alpha * ly / f.rho, -1.0 / f.alpha);
    case FamilyKind::PowerOfBase: {
      double lh = ly / s_;
      if (f.base_law->law == BaseLaw::Exponential) return f.base_law->param * std::exp(lh);
      double r = lh - std::log(f.base_law->param);
      if (!(r < 0.0)) throw RangeError("value outside the range of f_n");
      return -std::log1p(-std::exp(r));
    }
  }
  return 0.0;
}

double WeightLaw::log_f(double x) const {
  if (!(x > 0.0)) throw DomainError("f_n needs x > 0");
  return log_g(x / n_);
}

double WeightLaw::f(double x) const {
  if (!(x > 0.0)) throw DomainError("f_n needs x > 0");
  if (family_.kind == FamilyKind::PowerOfExp) return std::pow(x / n_, s_);
  return std::exp(log_g(x / n_));
}

double WeightLaw::inverse_from_log(double log_y) const {
  if (std::isnan(log_y)) throw RangeError("value outside the range of f_n");
  double u = u_from_log_g(log_y);
  if (!(u > 0.0) || !std::isfinite(u)) throw RangeError("value outside the range of f_n");
  return n_ * u;
}

double WeightLaw::inverse(double y) const {
  if (!(y > 0.0) || !std::isfinite(y)) throw RangeError("f_n_inverse needs 0 < y < inf");
  if (family_.kind == FamilyKind::PowerOfExp) return n_ * std::pow(y, 1.0 / s_);
  return inverse_from_log(std::log(y));
}

double WeightLaw::log_scaled(double x) const {
  if (!(x > 0.0)) throw DomainError("f_n needs x > 0");
  if (power_like(family_)) return s_ * std::log(x);
  return log_f(x) - log_f1_;
}

double WeightLaw::scaled(double x) const {
  if (power_like(family_)) return std::pow(x, s_);
  return std::exp(log_scaled(x));
}

double WeightLaw::scaled_inverse(double t) const {
  if (!(t > 0.0) || !(t < scaled_sup_)) throw RangeError("scaled value outside the range");
  if (power_like(family_)) return std::pow(t, 1.0 / s_);
  return inverse_from_log(std::log(t) + log_f1_);
}

double WeightLaw::log_ratio(double x0, double y) const {
  if (power_like(family_)) return s_ * std::log1p(y / x0);
  if (family_.kind == FamilyKind::PowerOfBase) {
    // Uniform base: log((1 - e^{-u1}) / (1 - e^{-u0})), u = x/n.
    double u0 = x0 / n_, d = y / n_;
    return s_ * std::log1p(std::exp(-u0) * (-std::expm1(-d)) / (-std::expm1(-u0)));
  }
  return log_f(x0 + y) - log_f(x0);
}

double WeightLaw::log_derivative(double x) const {
  if (!(x > 0.0)) throw DomainError("f_n needs x > 0");
  const auto& f = family_;
  double u = x / n_;
  switch (f.kind) {
    case FamilyKind::PowerOfExp: return s_;
    case FamilyKind::LogKappa:
      return u / (f.kappa * std::pow(f.rho, 1.0 / f.kappa)) *
             std::pow(flip(u), 1.0 / f.kappa - 1.0) / std::expm1(u);
    case FamilyKind::DoubleExpAlpha:
      return f.rho * u * std::exp(f.alpha * flip(u)) / std::expm1(u);
    case FamilyKind::InvPowerAlpha: return f.rho * std::pow(u, -f.alpha);
    case FamilyKind::PowerOfBase:
      if (f.base_law->law == BaseLaw::Uniform) return s_ * u / std::expm1(u);
      return s_;
  }
  return 0.0;
}

double f_n(const WeightFamily& family, double n, double x) {
  if (!(x > 0.0)) throw DomainError("f_n needs x > 0");
  return WeightLaw(family, n).f(x);
}

double f_n_inverse(const WeightFamily& family, double n, double y) {
  return WeightLaw(family, n).inverse(y);
}

double f_n_inverse_bisect(const WeightFamily& family, double n, double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw RangeError("f_n_inverse needs 0 < y < inf");
  WeightLaw law(family, n);
  const double ly = std::log(y);
  double lo = 1e-12, hi = 10.0 * n;
  for (int i = 0; i < 64 && !(law.log_f(lo) < ly); ++i) lo *= 1e-3;
  for (int i = 0; i < 64 && !(law.log_f(hi) > ly); ++i) hi *= 10.0;
  if (!(law.log_f(lo) < ly) || !(law.log_f(hi) > ly))
    throw RangeError("value outside the range of f_n");
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (law.log_f(std::exp(mid)) < ly) a = mid;
    else b = mid;
  }
  return std::exp(0.5 * (a + b));
}

double sample_edge_weight(const WeightFamily& family, double n, KeyedStream& stream) {
  WeightLaw law(family, n);
  double e = stream.exponential();
  // g(E) = f_n(nE).
  if (family.kind == FamilyKind::PowerOfExp) return std::pow(e, law.s());
  return law.f(n * e);
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["family"] = family_id;
  j["n"] = n;
  j["s_n"] = s_n;
  j["grid"] = grid;
  j["ratios"] = scaling_ratios;
  j["logderiv"] = logderiv;
  j["eps0"] = epsilon0_est;
  j["eps1"] = epsilon1_est;
  j["pass"] = {{"scaling", scaling_pass},
               {"small_weights", small_weights_pass},
               {"large_weights", large_weights_pass},
               {"all", pass()}};
  j["tolerances"] = {{"scaling_rel", tolerances.scaling_rel},
                     {"delta0", tolerances.delta0},
                     {"R", tolerances.R},
                     {"fd_step", tolerances.fd_step}};
  j["notes"] = notes;
  return j;
}

ConditionReport check_conditions(const WeightFamily& family, double n,
                                 const std::vector<double>& grid,
                                 const ConditionTolerances& tol) {
  WeightLaw law(family, n);
  ConditionReport rep;
  rep.kind = family.kind;
  rep.family_id = family.id();
  rep.n = n;
  rep.s_n = law.s();
  rep.grid = grid;
  rep.tolerances = tol;
  const double s = law.s();
  const double h = tol.fd_step;

  auto logderiv_at = [&](double x) {
    double a = law.log_f(x * (1.0 + h));
    double b = law.log_f(x * (1.0 - h));
    double d = (a - b) / (2.0 * h);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(d) || !(d > 0.0)) {
      std::ostringstream os;
      os << "log-derivative finite difference degenerate at x=" << x << " for "
         << family.id();
      throw NumericError(os.str());
    }
    return d;
  };

  rep.scaling_pass = true;
  for (double x : grid) {
    if (!(x > 0.0)) throw DomainError("condition grid points must be positive");
    double r = law.scaled(std::pow(x, 1.0 / s));
    if (!std::isfinite(r) || !(r > 0.0)) {
      throw NumericError("scaling ratio not finite and positive at x=" + std::to_string(x));
    }
    rep.scaling_ratios.push_back(r);
    rep.logderiv.push_back(logderiv_at(x));
    if (std::abs(r - x) > tol.scaling_rel * x) rep.scaling_pass = false;
  }

  const int k = std::max(2, tol.window_points);
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (int i = 0; i < k; ++i) {
    double x = (1.0 - tol.delta0) + tol.delta0 * i / (k - 1);
    if (!(x > 0.0)) continue;
    double r = logderiv_at(x) / s;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  rep.epsilon0_est = std::min(rmin, 1.0 / rmax);
  double r1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double x = 1.0 + (tol.R - 1.0) * i / (k - 1);
    r1 = std::min(r1, logderiv_at(x) / s);
  }
  rep.epsilon1_est = r1;
  rep.small_weights_pass = rep.epsilon0_est > 0.0;
  rep.large_weights_pass = rep.epsilon1_est > 0.0;
  rep.notes.push_back(
      "eps0 and eps1 are estimated on a finite grid at this n only; they do not certify "
      "constants that hold uniformly for all large n");
  return rep;
}

}  // namespace fpplab
