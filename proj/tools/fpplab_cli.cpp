#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fpplab/errors.hpp"
#include "fpplab/harness.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::size_t> replicas;
  std::optional<unsigned> jobs;
  bool strict = false;
};

int run(const std::string& kind, const Flags& f) {
  fpplab::ExperimentConfig c = f.config.empty() ? fpplab::ExperimentConfig::defaults(kind)
                                                : fpplab::ExperimentConfig::from_file(kind, f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.replicas) c.replicas = *f.replicas;
  if (f.jobs) c.jobs = *f.jobs;
  c.out = f.out;
  c.validate();
  fpplab::ExperimentResult r = fpplab::run_experiment(c);
  for (const auto& k : r.checks)
    std::printf("%s %-28s value=%.6g threshold=%.6g  %s\n", k.pass ? "PASS" : "FAIL", k.name.c_str(), k.value,
                k.threshold, k.detail.c_str());
  std::printf("%s: %s -> %s/%s.csv\n", kind.c_str(), r.pass() ? "pass" : "fail", c.out.c_str(), kind.c_str());
  return f.strict && !r.pass() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First passage percolation and invasion percolation experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const auto& kind : fpplab::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "Run the " + kind + " experiment");
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    sub->add_option("--replicas", flags.replicas, "Number of replicas")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", flags.jobs, "Worker threads (0: all cores)");
    sub->add_flag("--strict", flags.strict, "Exit with status 1 when a check fails");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return run(chosen, flags);
  } catch (const fpplab::PartialOutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.marker.empty()) std::cerr << "resume marker: " << e.marker << "\n";
    return 3;
  } catch (const fpplab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
