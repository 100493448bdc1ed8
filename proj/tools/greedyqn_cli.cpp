// Command-line front end: `run` a single solver or `compare` several on the
// same logistic-regression problem.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "greedyqn/cli.hpp"
#include "greedyqn/errors.hpp"

namespace {

using namespace greedyqn;

struct ProblemFlags {
  std::string dataset;
  std::string synthetic;
  std::size_t features = 0;
  std::size_t workers = 1;
  std::size_t tau = 6;
  double gamma = 1.0;
  std::string profile = "paper";
  std::optional<double> mu;
  std::optional<double> omega;
  std::optional<double> lipschitz;
  std::optional<double> m;
  double tol = 1e-9;
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  bool diagnostics = false;
  std::string variant = "bfgs";
  std::string init = "omega";
  bool parallel = false;
};

void add_problem_flags(CLI::App* app, ProblemFlags& f) {
  app->add_option("--dataset", f.dataset, "LIBSVM-format data file");
  app->add_option("--synthetic", f.synthetic, "synthetic data: n=..,m=..[,seed=..][,sep=..][,scale=..]");
  app->add_option("--features", f.features, "feature count when the file's largest index is smaller");
  app->add_option("--workers", f.workers, "worker count for dagqn")->check(CLI::PositiveNumber);
  app->add_option("--tau", f.tau, "greedy refinements per iteration");
  app->add_option("--gamma", f.gamma, "l2 regularization")->check(CLI::PositiveNumber);
  app->add_option("--profile", f.profile, "constants profile: paper, computed or explicit");
  app->add_option("--mu", f.mu, "strong convexity override");
  app->add_option("--omega", f.omega, "smoothness override");
  app->add_option("--L", f.lipschitz, "Hessian Lipschitz override");
  app->add_option("--M", f.m, "self-concordance override");
  app->add_option("--tol", f.tol, "gradient-norm tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", f.max_iters, "iteration cap");
  app->add_option("--seed", f.seed, "seed for x0 and synthetic data");
  app->add_flag("--diagnostics", f.diagnostics, "track sigma and lambda with explicit Hessians");
  app->add_option("--variant", f.variant, "Broyden variant: sr1, dfp, bfgs or fixed:<phi>");
  app->add_option("--init", f.init, "initial estimate: omega or warm");
  app->add_flag("--parallel", f.parallel, "run dagqn workers on threads");
}

RunConfig to_config(const ProblemFlags& f, const std::string& algo) {
  RunConfig c;
  c.algorithm = parse_algorithm(algo);
  if (!f.dataset.empty()) c.dataset = f.dataset;
  if (!f.synthetic.empty()) c.synthetic = SyntheticSpec::parse(f.synthetic);
  if (f.features > 0) c.features = f.features;
  c.workers = f.workers;
  c.tau = f.tau;
  c.gamma = f.gamma;
  c.profile = parse_profile(f.profile);
  c.mu = f.mu;
  c.omega = f.omega;
  c.lipschitz = f.lipschitz;
  c.self_concordance = f.m;
  c.tol = f.tol;
  c.max_iters = f.max_iters;
  c.seed = f.seed;
  c.diagnostics = f.diagnostics;
  try {
    c.variant = BroydenVariant::parse(f.variant);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (f.init == "omega") {
    c.init = InitPolicy::omega_identity;
  } else if (f.init == "warm") {
    c.init = InitPolicy::warm_start;
  } else {
    throw ConfigError("unknown --init '" + f.init + "' (expected omega or warm)");
  }
  c.parallel_workers = f.parallel;
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive greedy quasi-Newton solvers for regularized logistic regression"};
  app.require_subcommand(1);

  ProblemFlags run_flags;
  std::string run_algo = "agqn";
  std::string run_out;
  CLI::App* run_cmd = app.add_subcommand("run", "run one solver and write its trace CSV");
  run_cmd->add_option("--algo", run_algo, "agqn, dagqn, nagd or bfgs");
  run_cmd->add_option("--out", run_out, "trace CSV path (default: stdout)");
  add_problem_flags(run_cmd, run_flags);

  ProblemFlags cmp_flags;
  std::string cmp_algos = "agqn,nagd,bfgs";
  std::string cmp_taus;
  std::string cmp_out;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "run several solvers on one problem, long-format CSV");
  cmp_cmd->add_option("--algos", cmp_algos, "comma-separated algorithms");
  cmp_cmd->add_option("--taus", cmp_taus, "comma-separated tau values for agqn/dagqn (default: --tau)");
  cmp_cmd->add_option("--out", cmp_out, "combined CSV path (default: stdout)");
  add_problem_flags(cmp_cmd, cmp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      RunConfig config = to_config(run_flags, run_algo);
      if (!run_out.empty()) config.out = run_out;
      const RunOutcome o = run(config, config.out ? nullptr : &std::cout);
      (config.out ? std::cout : std::cerr) << o.summary << '\n';
      return o.exit_code;
    }

    std::vector<RunConfig> configs;
    std::vector<std::size_t> taus;
    for (const auto& t : split_list(cmp_taus)) {
      try {
        taus.push_back(std::stoul(t));
      } catch (const std::exception&) {
        throw ConfigError("--taus: '" + t + "' is not a nonnegative integer");
      }
    }
    if (taus.empty()) taus.push_back(cmp_flags.tau);
    for (const auto& algo : split_list(cmp_algos)) {
      RunConfig base = to_config(cmp_flags, algo);
      if (base.algorithm != Algorithm::dagqn) base.workers = 1;
      if (base.algorithm == Algorithm::agqn || base.algorithm == Algorithm::dagqn) {
        for (std::size_t t : taus) {
          base.tau = t;
          configs.push_back(base);
        }
      } else {
        configs.push_back(base);
      }
    }
    if (cmp_out.empty()) return compare(configs, std::cout, std::cerr);
    std::ofstream file(cmp_out);
    if (!file) throw Error("cannot write '" + cmp_out + "'");
    return compare(configs, file, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
