#include "fpplab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "fpplab/coupling.hpp"
#include "fpplab/ctbp.hpp"
#include "fpplab/errors.hpp"
#include "fpplab/exploration.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/ip.hpp"
#include "fpplab/pgw.hpp"
#include "fpplab/pwit.hpp"
#include "fpplab/random.hpp"
#include "fpplab/stats.hpp"

namespace fpplab {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double theta_cdf(double x) { return survival_probability(x); }

json defaults_json(std::string_view kind) {
  const json power8 = {{"kind", "PowerOfExp"}, {"s", 8.0}};
  const json power1 = {{"kind", "PowerOfExp"}, {"s", 1.0}};
  if (kind == "wn-scaling")
    return {{"family", {{"kind", "PowerOfExp"}, {"s", 1.0}}},
            {"n", {100, 1000, 10000}},
            {"s_n", "log-squared"},
            {"replicas", 1000},
            {"tolerances", {{"ks_max", 0.10}}}};
  if (kind == "ip-agreement")
    return {{"family", power1},
            {"n", {10000}},
            {"s_n", {64, 1}},
            {"replicas", 500},
            {"params", {{"m", 10}}},
            {"tolerances", {{"min_rate", 0.95}}}};
  if (kind == "freeze-scaling")
    return {{"family", power8},
            {"n", {10000}},
            {"s_n", {32}},
            {"replicas", 1000},
            {"params", {{"max_births", 5000000}}},
            {"tolerances", {{"ks_max", 0.10}}}};
  if (kind == "frozen-stats")
    return {{"family", power8},
            {"n", {10000}},
            {"s_n", {4, 8, 16}},
            {"replicas", 500},
            {"params", {{"max_births", 5000000}}},
            {"tolerances", {{"factor", 2.0}}}};
  if (kind == "coupling-iid")
    return {{"family", power8},
            {"n", {50}},
            {"s_n", {8}},
            {"replicas", 10000},
            {"params", {{"steps", 0}, {"pairs", 20}}},
            {"tolerances", {{"ks_p", 0.01}, {"pass_fraction", 0.99}, {"max_abs_rho", 0.05}}}};
  if (kind == "pgw-checks")
    return {{"family", power1},
            {"n", {2}},
            {"s_n", {1}},
            {"replicas", 100000},
            {"params",
             {{"means", {1.001, 1.01, 1.1, 1.5, 2, 3, 5, 10}},
              {"progeny_m", 0.9},
              {"progeny_k_max", 10},
              {"stirling_k", 100}}},
            {"tolerances",
             {{"fixed_point", 1e-12},
              {"theta2_abs", 1e-6},
              {"progeny_se", 3.0},
              {"stirling_rel", 0.02}}}};
  if (kind == "conditions")
    return {{"families",
             {{{"kind", "PowerOfExp"}, {"s", 16.0}},
              {{"kind", "LogKappa"}, {"rho", 1.0}, {"kappa", 0.5}},
              {{"kind", "DoubleExpAlpha"}, {"rho", 1.0}, {"alpha", 0.5}},
              {{"kind", "InvPowerAlpha"}, {"rho", 1.0}, {"alpha", 0.5}},
              {{"kind", "PowerOfBase"}, {"s", 16.0}, {"base", {{"law", "Exponential"}, {"param", 1.0}}}}}},
            {"n", {1000000}},
            {"s_n", {1}},
            {"replicas", 1},
            {"params", {{"grid", {0.25, 0.5, 1, 2, 3}}}},
            {"tolerances", {{"scaling_rel", 0.10}, {"delta0", 0.5}, {"R", 3.0}}}};
  if (kind == "forward-max")
    return {{"family", power1},
            {"n", {2}},
            {"s_n", {1}},
            {"replicas", 10000},
            {"params", {{"k", 200}}},
            {"tolerances", {{"mean_lo", 0.9}, {"mean_hi", 1.1}, {"ks_max", 0.02}}}};
  if (kind == "malthusian")
    return {{"family", power1},
            {"n", {10000}},
            {"s_n", {1, 4, 16, 64, 256}},
            {"replicas", 1},
            {"params", {{"euler_min_s", 256}}},
            {"tolerances", {{"closed_form", 1e-6}, {"euler", 0.02}}}};
  if (kind == "dijkstra-oracle")
    return {{"family", power1},
            {"n", {3, 4, 5, 6, 7}},
            {"s_n", {1}},
            {"replicas", 1000},
            {"tolerances", json::object()}};
  if (kind == "swt-coupling")
    return {{"family", power8},
            {"n", {200}},
            {"s_n", {8}},
            {"replicas", 100},
            {"params", {{"m", 50}, {"audit", 1}}},
            {"tolerances", json::object()}};
  throw ConfigError("unknown experiment kind: " + std::string(kind));
}

std::vector<double> number_list(const json& j, const char* key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(key) + " must be a number or a non-empty list");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(key) + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

void apply_config(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") {
      if (v.get<std::string>() != c.kind) throw ConfigError("config kind does not match the subcommand");
    } else if (key == "family") {
      c.families = {family_from_json(v)};
    } else if (key == "families") {
      if (!v.is_array() || v.empty()) throw ConfigError("families must be a non-empty list");
      c.families.clear();
      for (const auto& f : v) c.families.push_back(family_from_json(f));
    } else if (key == "n") {
      c.n = number_list(v, "n");
    } else if (key == "s_n") {
      if (v.is_string()) {
        if (v.get<std::string>() != "log-squared") throw ConfigError("s_n rule must be \"log-squared\"");
        c.s_rule = "log-squared";
        c.s_n.clear();
      } else {
        c.s_rule = "fixed";
        c.s_n = number_list(v, "s_n");
      }
    } else if (key == "replicas") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError("replicas must be a positive integer");
      c.replicas = v.get<std::size_t>();
    } else if (key == "seed") {
      if (!is_non_negative_integer(v)) throw ConfigError("seed must be an unsigned integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "jobs") {
      if (!is_non_negative_integer(v)) throw ConfigError("jobs must be an unsigned integer");
      c.jobs = v.get<unsigned>();
    } else if (key == "out") {
      c.out = v.get<std::string>();
    } else if (key == "tolerances" || key == "params") {
      json& target = key == "tolerances" ? c.tolerances : c.params;
      if (!v.is_object()) throw ConfigError(key + " must be an object");
      for (const auto& [k, x] : v.items()) {
        if (!target.contains(k)) throw ConfigError("unknown " + key + " entry for " + c.kind + ": " + k);
        target[k] = x;
      }
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
}

template <class T>
struct Replicated {
  std::vector<T> items;
  std::string csv;
};

// Runs f(i) for every task, joins rows in task order, and on failure writes
// the completed prefix and a resume marker before throwing.
template <class T, class F>
Replicated<T> replicate(const ExperimentConfig& c, std::size_t count, const std::string& header, F&& f) {
  std::vector<std::exception_ptr> errors;
  auto results = parallel_replicas<T>(count, c.jobs, f, errors);
  Replicated<T> out;
  out.csv = "# schema=" + std::to_string(kCsvSchema) + "\n" + header + "\n";
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) {
      std::string what = "replica task " + std::to_string(i) + " failed";
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        what += ": " + std::string(e.what());
      } catch (...) {
      }
      std::string marker;
      if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        std::ofstream(std::filesystem::path(c.out) / (c.kind + ".csv.partial"), std::ios::binary) << out.csv;
        json m = {{"kind", c.kind}, {"completed", i}, {"failed_task", i}, {"error", what}, {"config", c.to_json()}};
        marker = (std::filesystem::path(c.out) / (c.kind + ".resume.json")).string();
        std::ofstream(marker, std::ios::binary) << m.dump(2) << "\n";
      }
      throw PartialOutputError(what, i, marker);
    }
    out.csv += results[i]->row;
    out.items.push_back(std::move(*results[i]));
  }
  return out;
}

json check_json(const Check& k) {
  return {{"name", k.name}, {"pass", k.pass}, {"value", k.value}, {"threshold", k.threshold}, {"detail", k.detail}};
}

ExperimentResult finish(const ExperimentConfig& c, std::string csv, std::vector<Check> checks, json results) {
  ExperimentResult r;
  r.kind = c.kind;
  r.csv = std::move(csv);
  r.checks = std::move(checks);
  r.summary = {{"schema", kCsvSchema}, {"kind", c.kind}, {"config", c.to_json()}};
  json cj = json::array();
  for (const auto& k : r.checks) cj.push_back(check_json(k));
  r.summary["checks"] = cj;
  r.summary["pass"] = r.pass();
  r.summary["results"] = std::move(results);
  return r;
}

// theta(m) by iterating t <- 1 - e^{-m t} from t = 1; the map is a
// contraction near the positive root for m > 1.
double theta_fixed_point_iteration(double m) {
  double t = 1.0;
  for (int i = 0; i < 100000; ++i) {
    const double next = 1.0 - std::exp(-m * t);
    if (std::abs(next - t) < 1e-17) return next;
    t = next;
  }
  return t;
}

// ---------------------------------------------------------------- kinds

struct Row {
  std::string row;
};

ExperimentResult run_pgw_checks(const ExperimentConfig& c) {
  std::vector<Check> checks;
  json results;
  double worst = 0.0;
  json fp = json::array();
  for (const auto& mj : c.params["means"]) {
    const double m = mj.get<double>();
    const double t = survival_probability(m);
    const double res = std::abs(1.0 - t - std::exp(-m * t));
    worst = std::max(worst, res);
    fp.push_back({{"m", m}, {"theta", t}, {"residual", res}});
  }
  results["fixed_point"] = fp;
  checks.push_back({"fixed_point_residual", worst < c.tol("fixed_point"), worst, c.tol("fixed_point"),
                    "max |1 - theta(m) - exp(-m theta(m))| over the mean list"});

  const double t2 = survival_probability(2.0);
  const double oracle = theta_fixed_point_iteration(2.0);
  const double dev = std::max(std::abs(t2 - oracle), std::abs(t2 - 0.796812));
  results["theta2"] = {{"theta", t2}, {"fixed_point_iteration", oracle}};
  checks.push_back({"theta2", dev <= c.tol("theta2_abs"), dev, c.tol("theta2_abs"),
                    "theta(2) against fixed-point iteration and 0.796812"});

  const double m = c.param("progeny_m");
  struct Tree : Row {
    std::size_t size;
  };
  auto rep = replicate<Tree>(c, c.replicas, "seed,m,size,height,truncated", [&](std::size_t i) {
    const std::uint64_t seed = replica_seed(c.seed, c.kind, i);
    KeyedStream stream(seed);
    SampledTree t = sample_tree(m, 1000000, 1000000, stream);
    Tree out;
    out.size = t.size();
    out.row = std::to_string(seed) + "," + num(m) + "," + std::to_string(t.size()) + "," +
              std::to_string(t.height) + "," + (t.truncated ? "1" : "0") + "\n";
    return out;
  });
  const auto k_max = static_cast<std::size_t>(c.param("progeny_k_max"));
  std::vector<std::size_t> counts(k_max + 1, 0);
  for (const auto& t : rep.items)
    if (t.size <= k_max) ++counts[t.size];
  const double N = static_cast<double>(rep.items.size());
  double worst_z = 0.0;
  json table = json::array();
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double p = total_progeny_pmf(m, k).value;
    const double ph = static_cast<double>(counts[k]) / N;
    const double se = std::sqrt(std::max(ph * (1.0 - ph), p * (1.0 - p)) / N);
    const double z = std::abs(ph - p) / se;
    worst_z = std::max(worst_z, z);
    table.push_back({{"k", k}, {"empirical", ph}, {"exact", p}, {"se", se}, {"z", z}});
  }
  results["progeny"] = table;
  checks.push_back({"progeny_law", worst_z <= c.tol("progeny_se"), worst_z, c.tol("progeny_se"),
                    "max |empirical - exact| / s.e. over k = 1..k_max"});

  const auto ks = static_cast<std::uint64_t>(c.param("stirling_k"));
  const double exact = total_progeny_pmf(m, ks).value;
  const double stirling = total_progeny_stirling(m, ks);
  const double rel = std::abs(stirling / exact - 1.0);
  results["stirling"] = {{"k", ks}, {"exact", exact}, {"stirling", stirling}};
  checks.push_back({"stirling", rel < c.tol("stirling_rel"), rel, c.tol("stirling_rel"),
                    "relative error of the large-k form"});
  return finish(c, std::move(rep.csv), std::move(checks), std::move(results));
}

ExperimentResult run_malthusian(const ExperimentConfig& c) {
  std::vector<Check> checks;
  json results = json::array();
  std::string csv = "# schema=1\nfamily,n,s_n,lambda_scaled,log_lambda,closed_form,residual,evaluations\n";
  double worst = 0.0, euler_dev = 0.0;
  bool euler_seen = false;
  const double euler = std::exp(-std::numbers::egamma);
  for (double n : c.n) {
    for (double s : c.disorder(n)) {
      WeightLaw law(c.family_with(s), n);
      Malthusian m = malthusian(law);
      double closed = std::nan("");
      if (law.family().kind == FamilyKind::PowerOfExp) {
        closed = std::exp(law.s() * std::lgamma(1.0 + 1.0 / law.s()));
        worst = std::max(worst, std::abs(m.lambda_scaled - closed));
      }
      if (law.s() >= c.param("euler_min_s")) {
        euler_seen = true;
        euler_dev = std::max(euler_dev, std::abs(m.lambda_scaled - euler));
      }
      csv += m.family + "," + num(n) + "," + num(law.s()) + "," + num(m.lambda_scaled) + "," +
             num(m.log_lambda) + "," + num(closed) + "," + num(m.residual) + "," +
             std::to_string(m.evaluations) + "\n";
      results.push_back({{"family", m.family}, {"n", n}, {"s_n", law.s()}, {"lambda_scaled", m.lambda_scaled},
                         {"log_lambda", m.log_lambda}, {"closed_form", closed}, {"residual", m.residual}});
    }
  }
  checks.push_back({"closed_form", worst < c.tol("closed_form"), worst, c.tol("closed_form"),
                    "max |lambda_n f_n(1) - Gamma(1+1/s)^s|"});
  if (euler_seen)
    checks.push_back({"euler_limit", euler_dev < c.tol("euler"), euler_dev, c.tol("euler"),
                      "|lambda_n f_n(1) - e^{-gamma}| at the largest disorder values"});
  return finish(c, std::move(csv), std::move(checks), {{"rows", results}});
}

ExperimentResult run_dijkstra_oracle(const ExperimentConfig& c) {
  struct Item : Row {
    bool match;
  };
  const double s = c.disorder(c.n.front()).front();
  auto rep = replicate<Item>(c, c.replicas, "seed,n,W_dijkstra,W_brute,H_dijkstra,H_brute,match",
                             [&](std::size_t i) {
    const std::uint64_t seed = replica_seed(c.seed, c.kind, i);
    const double n = c.n[i % c.n.size()];
    WeightLaw law(c.family_with(s), n);
    auto src = EdgeWeightSource::iid(law, seed);
    FppResult d = dijkstra_dense(src);
    BruteForceResult b = brute_force(src);
    Item out;
    out.match = d.W == b.W && d.H == b.H && d.path == b.path;
    out.row = std::to_string(seed) + "," + num(n) + "," + num(d.W.value()) + "," + num(b.W.value()) + "," +
              std::to_string(d.H) + "," + std::to_string(b.H) + "," + (out.match ? "1" : "0") + "\n";
    return out;
  });
  const auto matches = static_cast<double>(std::count_if(rep.items.begin(), rep.items.end(), [](const Item& x) { return x.match; }));
  std::vector<Check> checks{{"oracle_match", matches == static_cast<double>(rep.items.size()), matches,
                             static_cast<double>(rep.items.size()), "instances where (W, H, path) agree exactly"}};
  return finish(c, std::move(rep.csv), std::move(checks), {{"matches", matches}, {"instances", rep.items.size()}});
}

ExperimentResult run_swt_coupling(const ExperimentConfig& c) {
  struct Item : Row {
    bool match;
  };
  const double n = c.n.front();
  const double s = c.disorder(n).front();
  const auto m = static_cast<std::size_t>(c.param("m"));
  const bool audit = c.param("audit") != 0.0;
  const WeightFamily family = c.family_with(s);
  auto rep = replicate<Item>(c, c.replicas, "seed,n,m,match,compared,exploration_steps,thinned,first_mismatch",
                             [&](std::size_t i) {
    const std::uint64_t seed = replica_seed(c.seed, c.kind, i);
    SwtCouplingReport r = verify_swt_coupling(seed, family, static_cast<std::uint32_t>(n), m, audit);
    Item out;
    out.match = r.match;
    out.row = std::to_string(seed) + "," + num(n) + "," + std::to_string(m) + "," + (r.match ? "1" : "0") + "," +
              std::to_string(r.compared) + "," + std::to_string(r.exploration_steps) + "," +
              std::to_string(r.thinned) + "," + std::to_string(r.first_mismatch) + "\n";
    return out;
  });
  const auto matches = static_cast<double>(std::count_if(rep.items.begin(), rep.items.end(), [](const Item& x) { return x.match; }));
  std::vector<Check> checks{{"swt_equality", matches == static_cast<double>(rep.items.size()), matches,
                             static_cast<double>(rep.items.size()),
                             "seeds where the unthinned exploration equals the SWT growth edge for edge and time for time"}};
  return finish(c, std::move(rep.csv), std::move(checks), {{"matches", matches}, {"seeds", rep.items.size()}});
}

ExperimentResult run_coupling_iid(const ExperimentConfig& c) {
  const auto n = static_cast<std::uint32_t>(c.n.front());
  const double s = c.disorder(n).front();
  const WeightFamily family = c.family_with(s);
  const WeightLaw law(family, n);
  const std::size_t steps = c.param("steps") > 0 ? static_cast<std::size_t>(c.param("steps")) : n;
  const std::size_t edges = static_cast<std::size_t>(n) * (n - 1) / 2;
  struct Item : Row {
    std::vector<double> x;
    bool fallback_12;
  };
  auto rep = replicate<Item>(c, c.replicas, "seed,steps,unthinned,from_tree,fallback,cap_fallback,X_1_2,X_1_3",
                             [&](std::size_t i) {
    const std::uint64_t seed = replica_seed(c.seed, c.kind, i);
    PwitSample sample(seed, n);
    CouplingOptions opt;
    opt.rule = MinimalRule{RuleKind::FppTime};
    opt.roots = {1, 2};
    opt.steps = steps;
    CouplingSession session(sample, &law, opt);
    session.run();
    CoupledWeights w = session.coupled_weights();
    Item out;
    out.x.reserve(edges);
    for (std::uint32_t a = 1; a <= n; ++a)
      for (std::uint32_t b = a + 1; b <= n; ++b) out.x.push_back(w.at(a, b) / n);
    out.fallback_12 = w.at(1, 2) == session.fallback_xi(1, 2);
    out.row = std::to_string(seed) + "," + std::to_string(steps) + "," + std::to_string(session.unthinned_steps()) +
              "," + std::to_string(w.from_tree) + "," + std::to_string(w.fallback) + "," +
              std::to_string(w.cap_fallback) + "," + num(w.at(1, 2) / n) + "," + num(w.at(1, 3) / n) + "\n";
    return out;
  });
  const std::size_t R = rep.items.size();
  auto exp_cdf = [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); };
  std::size_t passing = 0;
  double min_p = 1.0;
  std::vector<double> column(R);
  for (std::size_t e = 0; e < edges; ++e) {
    for (std::size_t r = 0; r < R; ++r) column[r] = rep.items[r].x[e];
    TestResult t = ks_test(column, exp_cdf);
    if (t.p_value > c.tol("ks_p")) ++passing;
    min_p = std::min(min_p, t.p_value);
  }
  const double frac = static_cast<double>(passing) / static_cast<double>(edges);

  KeyedStream pick(hash_key(c.seed, hash_string("coupling-pairs")));
  auto draw = [&] { return static_cast<std::size_t>((static_cast<unsigned __int128>(pick()) * edges) >> 64); };
  json pairs = json::array();
  double max_rho = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  const auto pair_count = static_cast<std::size_t>(c.param("pairs"));
  std::vector<double> xa(R), xb(R);
  // Correlations need two replicas; a single replica leaves the check failing.
  if (R < 2) max_rho = std::nan("");
  while (R >= 2 && chosen.size() < pair_count && edges >= 2) {
    std::size_t a = draw(), b = draw();
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (std::find(chosen.begin(), chosen.end(), std::make_pair(a, b)) != chosen.end()) continue;
    chosen.emplace_back(a, b);
    for (std::size_t r = 0; r < R; ++r) {
      xa[r] = rep.items[r].x[a];
      xb[r] = rep.items[r].x[b];
    }
    const double rho = pearson_correlation(xa, xb);
    max_rho = std::max(max_rho, std::abs(rho));
    pairs.push_back({{"edge_a", a}, {"edge_b", b}, {"rho", rho}});
  }
  const auto fallback12 = static_cast<double>(
      std::count_if(rep.items.begin(), rep.items.end(), [](const Item& x) { return x.fallback_12; }));

  std::vector<Check> checks;
  checks.push_back({"per_edge_ks", frac >= c.tol("pass_fraction"), frac, c.tol("pass_fraction"),
                    "fraction of edges whose KS test against Exp(1) has p > " + num(c.tol("ks_p"))});
  checks.push_back({"pair_correlation", max_rho < c.tol("max_abs_rho"), max_rho, c.tol("max_abs_rho"),
                    "max |rho| over the sampled edge pairs"});
  checks.push_back({"root_pair_fallback", fallback12 == static_cast<double>(R), fallback12, static_cast<double>(R),
                    "replicas where {1,2} carries the independent fallback value"});
  json results = {{"edges", edges}, {"passing_edges", passing}, {"min_p", min_p}, {"pairs", pairs}};
  return finish(c, std::move(rep.csv), std::move(checks), std::move(results));
}

ExperimentResult run_wn_scaling(const ExperimentConfig& c) {
  struct Item : Row {
    std::size_t grid;
    double x;
  };
  std::vector<std::pair<double, double>> grid;  // (n, s)
  for (double n : c.n)
    for (double s : c.disorder(n)) grid.emplace_back(n, s);
  std::vector<WeightLaw> laws;
  for (auto [n, s] : grid) laws.emplace_back(c.family_with(s), n);
  auto rep = replicate<Item>(c, grid.size() * c.replicas, "seed,n,s_n,W_n,f_n_inverse_W_n,H_n", [&](std::size_t t) {
    const std::size_t g = t / c.replicas, r = t % c.replicas;
    const std::uint64_t seed = replica_seed(c.seed, c.kind, r);
    FppResult res = shortest_weight(EdgeWeightSource::iid(laws[g], seed));
    std::ostringstream os;
    write_fpp_csv_row(os, seed, laws[g], res);
    return Item{{os.str()}, g, laws[g].scaled_inverse(res.W.value())};
  });
  std::vector<std::vector<double>> samples(grid.size());
  for (const auto& it : rep.items) samples[it.grid].push_back(it.x);
  auto ref = [](double x) {
    const double t = survival_probability(x);
    return t * t;
  };
  json rows = json::array();
  std::vector<double> ks;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EcdfSummary e = summarize(samples[g], "theta(x)^2", ref);
    ks.push_back(e.ks);
    json j = e.to_json();
    j["n"] = grid[g].first;
    j["s_n"] = grid[g].second;
    rows.push_back(j);
  }
  bool monotone = true;
  for (std::size_t g = 1; g < ks.size(); ++g) monotone = monotone && ks[g] <= ks[g - 1];
  std::vector<Check> checks;
  checks.push_back({"ks_non_increasing", monotone, ks.back() - ks.front(), 0.0, "KS distance over the n grid"});
  checks.push_back({"ks_final", ks.back() < c.tol("ks_max"), ks.back(), c.tol("ks_max"), "KS distance at the largest n"});
  return finish(c, std::move(rep.csv), std::move(checks), {{"grid", rows}});
}

ExperimentResult run_ip_agreement(const ExperimentConfig& c) {
  struct Item : Row {
    std::size_t grid;
    bool agree;
  };
  const double n = c.n.front();
  const std::vector<double> s_list = c.disorder(n);
  const auto m = static_cast<std::size_t>(c.param("m"));
  auto rep = replicate<Item>(c, s_list.size() * c.replicas, "seed,n,s_n,m,agree", [&](std::size_t t) {
    const std::size_t g = t / c.replicas, r = t % c.replicas;
    const std::uint64_t seed = replica_seed(c.seed, c.kind, r);
    const bool agree = verify_ip_agreement(seed, c.family_with(s_list[g]), static_cast<std::uint32_t>(n), m);
    return Item{{std::to_string(seed) + "," + num(n) + "," + num(s_list[g]) + "," + std::to_string(m) + "," +
                 (agree ? "1" : "0") + "\n"},
                g, agree};
  });
  std::vector<double> rate(s_list.size(), 0.0);
  for (const auto& it : rep.items) rate[it.grid] += it.agree ? 1.0 : 0.0;
  json rows = json::array();
  for (std::size_t g = 0; g < s_list.size(); ++g) {
    rate[g] /= static_cast<double>(c.replicas);
    rows.push_back({{"s_n", s_list[g]}, {"rate", rate[g]}});
  }
  std::vector<Check> checks;
  checks.push_back({"agreement_rate", rate[0] >= c.tol("min_rate"), rate[0], c.tol("min_rate"),
                    "agreement frequency at s_n = " + num(s_list[0])});
  for (std::size_t g = 1; g < s_list.size(); ++g)
    checks.push_back({"exceeds_s_" + num(s_list[g]), rate[0] > rate[g], rate[0] - rate[g], 0.0,
                      "rate at s_n = " + num(s_list[0]) + " minus rate at s_n = " + num(s_list[g])});
  return finish(c, std::move(rep.csv), std::move(checks), {{"rates", rows}});
}

ExperimentResult run_forward_max(const ExperimentConfig& c) {
  struct Item : Row {
    double M0, gap;
    bool monotone;
  };
  const auto k = static_cast<std::size_t>(c.param("k"));
  auto rep = replicate<Item>(c, c.replicas, "seed,k,M_0,M_k,k_times_M_k_minus_1,monotone", [&](std::size_t i) {
    const std::uint64_t seed = replica_seed(c.seed, c.kind, i);
    KeyedStream stream(seed);
    ForwardMaxChain chain = forward_max_chain(k, stream);
    Item out;
    out.monotone = std::is_sorted(chain.M.rbegin(), chain.M.rend());
    out.M0 = chain.M.front();
    out.gap = static_cast<double>(k) * (chain.M.back() - 1.0);
    out.row = std::to_string(seed) + "," + std::to_string(k) + "," + num(out.M0) + "," + num(chain.M.back()) + "," +
              num(out.gap) + "," + (out.monotone ? "1" : "0") + "\n";
    return out;
  });
  std::vector<double> m0, gaps;
  double monotone = 0.0;
  for (const auto& it : rep.items) {
    m0.push_back(it.M0);
    gaps.push_back(it.gap);
    monotone += it.monotone ? 1.0 : 0.0;
  }
  const double gm = mean(gaps);
  EcdfSummary e = summarize(m0, "theta", theta_cdf);
  std::vector<Check> checks;
  checks.push_back({"non_increasing", monotone == static_cast<double>(rep.items.size()), monotone,
                    static_cast<double>(rep.items.size()), "chains that never increase"});
  checks.push_back({"gap_mean", gm >= c.tol("mean_lo") && gm <= c.tol("mean_hi"), gm, c.tol("mean_hi"),
                    "mean of k (M_k - 1), band [" + num(c.tol("mean_lo")) + ", " + num(c.tol("mean_hi")) + "]"});
  checks.push_back({"M0_ks", e.ks < c.tol("ks_max"), e.ks, c.tol("ks_max"), "KS of M_0 against theta"});
  json results = {{"gap_mean", gm}, {"gap_se", gaps.size() > 1 ? json(standard_error(gaps)) : json(nullptr)}, {"M0", e.to_json()}};
  return finish(c, std::move(rep.csv), std::move(checks), std::move(results));
}

struct FreezeSetup {
  WeightLaw law;
  Malthusian malthusian;
  DiscountKernel kernel;
  explicit FreezeSetup(WeightLaw l)
      : law(std::move(l)), malthusian(fpplab::malthusian(law)), kernel(law, malthusian.lambda_scaled) {}
};

struct FreezeItem : Row {
  std::size_t grid = 0;
  FreezeRecord record;
  bool capped = false;
};

Replicated<FreezeItem> run_freeze_grid(const ExperimentConfig& c, std::vector<std::unique_ptr<FreezeSetup>>& setups) {
  for (double n : c.n)
    for (double s : c.disorder(n)) setups.push_back(std::make_unique<FreezeSetup>(WeightLaw(c.family_with(s), n)));
  FreezeCaps caps;
  caps.max_births = static_cast<std::size_t>(c.param("max_births"));
  std::ostringstream header;
  write_freeze_csv_header(header);
  std::string h = header.str();
  h.pop_back();
  return replicate<FreezeItem>(c, setups.size() * c.replicas, h, [&](std::size_t t) {
    const std::size_t g = t / c.replicas, r = t % c.replicas;
    const std::uint64_t seed = replica_seed(c.seed, c.kind, r);
    const FreezeSetup& setup = *setups[g];
    PwitSample sample(seed, static_cast<std::uint32_t>(setup.law.n()));
    FreezeItem out;
    out.grid = g;
    try {
      out.record = run_with_freezing(sample, setup.law, setup.kernel, caps);
    } catch (const FreezeCapError& e) {
      out.record = e.record;
      out.capped = true;
    }
    std::ostringstream os;
    write_freeze_csv_row(os, seed, setup.law, out.record);
    out.row = os.str();
    return out;
  });
}

ExperimentResult run_freeze_scaling(const ExperimentConfig& c) {
  std::vector<std::unique_ptr<FreezeSetup>> setups;
  auto rep = run_freeze_grid(c, setups);
  std::vector<Check> checks;
  json rows = json::array();
  for (std::size_t g = 0; g < setups.size(); ++g) {
    const auto& law = setups[g]->law;
    const double s = law.s();
    std::vector<double> x[2];
    double capped = 0.0, outside = 0.0, unfr = 0.0;
    for (const auto& it : rep.items) {
      if (it.grid != g) continue;
      capped += it.capped ? 1.0 : 0.0;
      const auto& rec = it.record;
      if (rec.T_unfr != std::max(rec.T_fr[0], rec.T_fr[1])) unfr += 1.0;
      for (int j = 0; j < 2; ++j) {
        x[j].push_back(law.scaled_inverse(rec.T_fr[j].value()));
        const double v = rec.crossing_value[j];
        if (s > 1.0 && !(v >= s && v <= s + 1.0)) outside += 1.0;
      }
    }
    EcdfSummary e1 = summarize(x[0], "theta", theta_cdf);
    EcdfSummary e2 = summarize(x[1], "theta", theta_cdf);
    std::vector<double> pooled = x[0];
    pooled.insert(pooled.end(), x[1].begin(), x[1].end());
    EcdfSummary ep = summarize(pooled, "theta", theta_cdf);
    const std::string tag = "s_" + num(s);
    const double ks = std::max(e1.ks, e2.ks);
    checks.push_back({tag + "_ks", ks < c.tol("ks_max"), ks, c.tol("ks_max"),
                      "max over j of the KS distance of f_n^{-1}(T_fr^(j)) against theta"});
    checks.push_back({tag + "_crossing", outside == 0.0, outside, 0.0, "crossing values outside [s_n, s_n + 1]"});
    checks.push_back({tag + "_unfreeze", unfr == 0.0, unfr, 0.0, "runs with T_unfr != max T_fr"});
    checks.push_back({tag + "_caps", capped == 0.0, capped, 0.0, "runs stopped by the birth cap"});
    rows.push_back({{"s_n", s},
                    {"n", law.n()},
                    {"lambda_scaled", setups[g]->malthusian.lambda_scaled},
                    {"T_fr1", e1.to_json()},
                    {"T_fr2", e2.to_json()},
                    {"pooled", ep.to_json()}});
  }
  return finish(c, std::move(rep.csv), std::move(checks), {{"grid", rows}});
}

ExperimentResult run_frozen_stats(const ExperimentConfig& c) {
  std::vector<std::unique_ptr<FreezeSetup>> setups;
  auto rep = run_freeze_grid(c, setups);
  std::vector<FrozenSeries> series(setups.size());
  double capped = 0.0, empty = 0.0;
  for (std::size_t g = 0; g < setups.size(); ++g) series[g].s_n = setups[g]->law.s();
  for (const auto& it : rep.items) {
    series[it.grid].volume.push_back(it.record.volume);
    series[it.grid].diameter.push_back(it.record.diameter);
    capped += it.capped ? 1.0 : 0.0;
    empty += it.record.volume < 1 ? 1.0 : 0.0;
  }
  std::vector<FrozenStatsRow> table = frozen_stats(series);
  json rows = json::array();
  for (const auto& r : table)
    rows.push_back({{"s_n", r.s_n},
                    {"runs", r.runs},
                    {"volume_median", r.volume_median},
                    {"volume_q90", r.volume_q90},
                    {"diameter_median", r.diameter_median},
                    {"diameter_q90", r.diameter_q90}});
  const double f = c.tol("factor");
  double worst_v = 1.0, worst_d = 1.0;
  auto spread = [](double a, double b) { return std::max(a / b, b / a); };
  for (std::size_t g = 1; g < table.size(); ++g) {
    worst_v = std::max(worst_v, spread(table[g].volume_median, table[g - 1].volume_median));
    worst_d = std::max(worst_d, spread(table[g].diameter_median, table[g - 1].diameter_median));
  }
  std::vector<Check> checks;
  checks.push_back({"volume_band", worst_v <= f, worst_v, f,
                    "largest factor between medians of |B_fr| / s_n^2 at consecutive s_n"});
  checks.push_back({"diameter_band", worst_d <= f, worst_d, f,
                    "largest factor between medians of diameter / s_n at consecutive s_n"});
  checks.push_back({"volume_positive", empty == 0.0, empty, 0.0, "runs with an empty frozen cluster"});
  checks.push_back({"caps", capped == 0.0, capped, 0.0, "runs stopped by the birth cap"});
  return finish(c, std::move(rep.csv), std::move(checks), {{"table", rows}});
}

ExperimentResult run_conditions(const ExperimentConfig& c) {
  ConditionTolerances tol;
  tol.scaling_rel = c.tol("scaling_rel");
  tol.delta0 = c.tol("delta0");
  tol.R = c.tol("R");
  std::vector<double> grid;
  for (const auto& x : c.params["grid"]) grid.push_back(x.get<double>());
  std::string csv = "# schema=1\nfamily,n,s_n,eps0,eps1,scaling_pass,small_weights_pass,large_weights_pass\n";
  std::vector<Check> checks;
  json reports = json::array();
  for (const auto& family : c.families) {
    for (double n : c.n) {
      ConditionReport r = check_conditions(family, n, grid, tol);
      csv += r.family_id + "," + num(n) + "," + num(r.s_n) + "," + num(r.epsilon0_est) + "," + num(r.epsilon1_est) +
             "," + (r.scaling_pass ? "1" : "0") + "," + (r.small_weights_pass ? "1" : "0") + "," +
             (r.large_weights_pass ? "1" : "0") + "\n";
      reports.push_back(r.to_json());
      checks.push_back({r.family_id + "_n_" + num(n), r.pass(), r.epsilon0_est, tol.scaling_rel,
                        "scaling, small-weight and large-weight conditions on the grid"});
    }
  }
  return finish(c, std::move(csv), std::move(checks), {{"reports", reports}});
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{
      "wn-scaling", "ip-agreement", "freeze-scaling", "frozen-stats", "coupling-iid", "pgw-checks",
      "conditions", "forward-max",  "malthusian",     "dijkstra-oracle", "swt-coupling"};
  return kinds;
}

bool is_experiment_kind(std::string_view kind) {
  const auto& k = experiment_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

ExperimentConfig ExperimentConfig::defaults(std::string_view kind) {
  ExperimentConfig c;
  c.kind = std::string(kind);
  json d = defaults_json(kind);
  if (d.contains("tolerances")) c.tolerances = d["tolerances"];
  if (d.contains("params")) c.params = d["params"];
  d.erase("tolerances");
  d.erase("params");
  apply_config(c, d);
  return c;
}

ExperimentConfig ExperimentConfig::from_json(std::string_view kind, const json& j) {
  ExperimentConfig c = defaults(kind);
  apply_config(c, j);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(std::string_view kind, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(kind, j);
}

void ExperimentConfig::validate() const {
  if (!is_experiment_kind(kind)) throw ConfigError("unknown experiment kind: " + kind);
  if (replicas < 1) throw ConfigError("replicas must be at least 1");
  if (families.empty()) throw ConfigError("family list is empty");
  if (n.empty()) throw ConfigError("n list is empty");
  for (double v : n)
    if (!(v >= 2.0) || v != std::floor(v)) throw ConfigError("n values must be integers >= 2");
  if (s_rule == "fixed" && s_n.empty()) throw ConfigError("s_n list is empty");
  for (double v : s_n)
    if (!(v > 0.0)) throw ConfigError("s_n values must be positive");
  for (const auto& f : families) f.validate();
}

json ExperimentConfig::to_json() const {
  json fam = json::array();
  for (const auto& f : families) fam.push_back(fpplab::to_json(f));
  json j = {{"kind", kind}, {"families", fam}, {"n", n}, {"replicas", replicas}, {"seed", seed},
            {"tolerances", tolerances}, {"params", params}};
  if (s_rule == "fixed") j["s_n"] = s_n;
  else j["s_n"] = s_rule;
  return j;
}

double ExperimentConfig::tol(const std::string& key) const {
  if (!tolerances.contains(key)) throw ConfigError("missing tolerance " + key + " for " + kind);
  return tolerances[key].get<double>();
}

double ExperimentConfig::param(const std::string& key) const {
  if (!params.contains(key)) throw ConfigError("missing parameter " + key + " for " + kind);
  return params[key].get<double>();
}

std::vector<double> ExperimentConfig::disorder(double nv) const {
  if (s_rule == "log-squared") {
    const double l = std::log(nv);
    return {l * l};
  }
  return s_n;
}

WeightFamily ExperimentConfig::family_with(double s) const {
  WeightFamily f = families.front();
  if (f.kind == FamilyKind::PowerOfExp || f.kind == FamilyKind::PowerOfBase) f.s_override = s;
  return f;
}

bool ExperimentResult::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::uint64_t replica_seed(std::uint64_t master, std::string_view kind, std::size_t replica) {
  return hash_key(master, hash_string(kind), replica);
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  static const std::map<std::string, ExperimentResult (*)(const ExperimentConfig&)> table{
      {"wn-scaling", run_wn_scaling},     {"ip-agreement", run_ip_agreement},
      {"freeze-scaling", run_freeze_scaling}, {"frozen-stats", run_frozen_stats},
      {"coupling-iid", run_coupling_iid}, {"pgw-checks", run_pgw_checks},
      {"conditions", run_conditions},     {"forward-max", run_forward_max},
      {"malthusian", run_malthusian},     {"dijkstra-oracle", run_dijkstra_oracle},
      {"swt-coupling", run_swt_coupling}};
  ExperimentResult r = table.at(config.kind)(config);
  if (!config.out.empty()) write_outputs(config.out, r);
  return r;
}

void write_outputs(const std::string& out, const ExperimentResult& result) {
  std::filesystem::create_directories(out);
  const auto dir = std::filesystem::path(out);
  std::ofstream(dir / (result.kind + ".csv"), std::ios::binary) << result.csv;
  std::ofstream(dir / (result.kind + ".summary.json"), std::ios::binary) << result.summary.dump(2) << "\n";
  std::filesystem::remove(dir / (result.kind + ".csv.partial"));
  std::filesystem::remove(dir / (result.kind + ".resume.json"));
}

}  // namespace fpplab
