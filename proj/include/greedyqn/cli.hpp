#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greedyqn/agqn.hpp"
#include "greedyqn/broyden.hpp"
#include "greedyqn/dagqn.hpp"
#include "greedyqn/data.hpp"
#include "greedyqn/trace.hpp"

namespace greedyqn {

enum class Algorithm { agqn, dagqn, nagd, bfgs };
enum class ConstantsProfile { paper, computed, explicit_values };

Algorithm parse_algorithm(const std::string& s);
std::string to_string(Algorithm a);
ConstantsProfile parse_profile(const std::string& s);
std::string to_string(ConstantsProfile p);

/// "n=30,m=500[,seed=7][,sep=3][,scale=1]".
struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  std::optional<std::uint64_t> seed;  // falls back to the run seed
  double separability = 3.0;
  double scale = 1.0;  // multiplies every feature

  static SyntheticSpec parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::agqn;
  std::optional<std::string> dataset;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::size_t> features;  // widens the dataset's feature count
  std::size_t tau = 6;
  std::size_t workers = 1;
  double gamma = 1.0;
  ConstantsProfile profile = ConstantsProfile::paper;
  std::optional<double> mu;
  std::optional<double> omega;
  std::optional<double> lipschitz;
  std::optional<double> self_concordance;
  double tol = 1e-9;
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  std::optional<std::string> out;
  bool diagnostics = false;
  BroydenVariant variant = BroydenVariant::bfgs();
  InitPolicy init = InitPolicy::omega_identity;
  bool parallel_workers = false;

  /// Throws ConfigError.
  void validate() const;
  /// Dataset, synthetic spec, feature override, gamma and seed.
  bool same_problem(const RunConfig& other) const;
};

struct RunOutcome {
  int exit_code = 1;
  SolverResult result;
  std::optional<RoundStats> stats;
  SmoothnessConstants constants;
  double wall_seconds = 0.0;
  std::string summary;
};

/// Exit code for a finished run: 0 on gradient tolerance, 2 on max iterations.
int exit_code_for(const SolverResult& result);

/// The dataset a config refers to (file or synthetic).
Dataset load_data(const RunConfig& config);

/// x0 ~ N(0, I) from the run seed.
Vector initial_point(std::size_t n, std::uint64_t seed);

/// Constants for one objective over `samples_per_worker` samples, following
/// the profile and then the explicit overrides.
SmoothnessConstants resolve_constants(const RunConfig& config, const LogisticProblem& problem,
                                      double samples_per_worker);

/// Runs one solver. The trace goes to `config.out` when set, else to `csv`
/// when non-null.
RunOutcome run(const RunConfig& config, std::ostream* csv = nullptr);

/// Runs every config on the same problem and writes a long-format CSV
/// (algorithm,tau,workers,iter,f,grad_norm,hvp_calls,comm_rounds,scalars_pushed).
/// Summary lines go to `summary`. Returns 0 if every run converged, else 2.
int compare(const std::vector<RunConfig>& configs, std::ostream& csv, std::ostream& summary);

}  // namespace greedyqn
