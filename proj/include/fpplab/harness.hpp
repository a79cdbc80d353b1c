#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fpplab/weights.hpp"

namespace fpplab {

inline constexpr int kCsvSchema = 1;
inline constexpr std::uint64_t kDefaultMasterSeed = 1234567;

// The eight kinds named by the experiment grammar, followed by the extra kinds
// that back the remaining acceptance criteria.
const std::vector<std::string>& experiment_kinds();
bool is_experiment_kind(std::string_view kind);

struct ExperimentConfig {
  std::string kind;
  std::vector<WeightFamily> families;
  std::vector<double> n;
  // Fixed disorder values; replaced by s_n = (log n)^2 when s_rule is "log-squared".
  std::vector<double> s_n;
  std::string s_rule = "fixed";
  std::size_t replicas = 1;
  std::uint64_t seed = kDefaultMasterSeed;
  std::string out;
  unsigned jobs = 0;  // 0: hardware concurrency
  nlohmann::json tolerances = nlohmann::json::object();
  nlohmann::json params = nlohmann::json::object();

  static ExperimentConfig defaults(std::string_view kind);
  // Starts from defaults(kind) and applies the keys present in `j`.
  static ExperimentConfig from_json(std::string_view kind, const nlohmann::json& j);
  static ExperimentConfig from_file(std::string_view kind, const std::string& path);

  void validate() const;
  nlohmann::json to_json() const;

  double tol(const std::string& key) const;
  double param(const std::string& key) const;
  // Disorder values for grid point n: s_n list, or (log n)^2.
  std::vector<double> disorder(double n) const;
  // families[0] with its exponent replaced by s (power families only).
  WeightFamily family_with(double s) const;
};

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentResult {
  std::string kind;
  std::string csv;  // including the schema line
  nlohmann::json summary;
  std::vector<Check> checks;

  bool pass() const;
};

// Thrown when a replica fails; the rows of the completed prefix and a resume
// marker have been written when an output directory was configured.
struct PartialOutputError : std::runtime_error {
  PartialOutputError(const std::string& what, std::size_t completed, std::string marker)
      : std::runtime_error(what), completed(completed), marker(std::move(marker)) {}
  std::size_t completed;
  std::string marker;
};

std::uint64_t replica_seed(std::uint64_t master, std::string_view kind, std::size_t replica);

ExperimentResult run_experiment(const ExperimentConfig& config);
// <out>/<kind>.csv and <out>/<kind>.summary.json
void write_outputs(const std::string& out, const ExperimentResult& result);

unsigned resolve_jobs(unsigned jobs);

// Calls f(i) for i < count on a pool of `jobs` threads and returns the results
// by index. Every index is attempted; failures are reported per index.
template <class T, class F>
std::vector<std::optional<T>> parallel_replicas(std::size_t count, unsigned jobs, F&& f,
                                                std::vector<std::exception_ptr>& errors) {
  std::vector<std::optional<T>> out(count);
  errors.assign(count, nullptr);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        out[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(resolve_jobs(jobs), count));
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace fpplab
