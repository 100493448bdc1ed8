#include "greedyqn/cli.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "greedyqn/baselines.hpp"
#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw ConfigError("synthetic: '" + key + "' needs a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("synthetic: '" + key + "' needs a nonnegative integer, got '" + value + "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError("synthetic: '" + key + "' is out of range");
  }
}

std::string summary_line(const RunConfig& c, const RunOutcome& o) {
  const auto& r = o.result;
  std::ostringstream os;
  os << "algo=" << to_string(c.algorithm);
  if (c.algorithm == Algorithm::agqn || c.algorithm == Algorithm::dagqn) os << " tau=" << c.tau;
  if (c.algorithm == Algorithm::dagqn) os << " workers=" << c.workers;
  os << " iterations=" << r.iterations << " termination=" << to_string(r.termination)
     << " grad_norm=" << format_real(r.trace.back().grad_norm) << " hvp_calls=" << r.hvp_calls
     << " f_evals=" << r.function_evals << " g_evals=" << r.gradient_evals;
  if (o.stats) {
    const std::size_t total = o.stats->pushed_scalars_total + o.stats->pulled_scalars_total +
                              o.stats->bootstrap_pushed_per_worker * o.stats->workers;
    os << " rounds=" << o.stats->rounds << " scalars_per_push=" << o.stats->pushed_per_worker_per_round
       << " total_scalars=" << total;
  } else {
    os << " rounds=0 total_scalars=0";
  }
  os << " wall_s=" << format_real(o.wall_seconds);
  return os.str();
}

}  // namespace

Algorithm parse_algorithm(const std::string& s) {
  if (s == "agqn") return Algorithm::agqn;
  if (s == "dagqn") return Algorithm::dagqn;
  if (s == "nagd") return Algorithm::nagd;
  if (s == "bfgs" || s == "bfgs-wolfe") return Algorithm::bfgs;
  throw ConfigError("unknown algorithm '" + s + "' (expected agqn, dagqn, nagd or bfgs)");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::agqn:
      return "agqn";
    case Algorithm::dagqn:
      return "dagqn";
    case Algorithm::nagd:
      return "nagd";
    case Algorithm::bfgs:
      return "bfgs";
  }
  return "unknown";
}

ConstantsProfile parse_profile(const std::string& s) {
  if (s == "paper") return ConstantsProfile::paper;
  if (s == "computed") return ConstantsProfile::computed;
  if (s == "explicit") return ConstantsProfile::explicit_values;
  throw ConfigError("unknown constants profile '" + s + "' (expected paper, computed or explicit)");
}

std::string to_string(ConstantsProfile p) {
  switch (p) {
    case ConstantsProfile::paper:
      return "paper";
    case ConstantsProfile::computed:
      return "computed";
    case ConstantsProfile::explicit_values:
      return "explicit";
  }
  return "unknown";
}

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  SyntheticSpec spec;
  bool has_n = false;
  bool has_m = false;
  for (const std::string& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("synthetic: expected key=value, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "n") {
      spec.n = parse_count(key, value);
      has_n = true;
    } else if (key == "m") {
      spec.m = parse_count(key, value);
      has_m = true;
    } else if (key == "seed") {
      spec.seed = parse_count(key, value);
    } else if (key == "sep") {
      spec.separability = parse_real(key, value);
    } else if (key == "scale") {
      spec.scale = parse_real(key, value);
    } else {
      throw ConfigError("synthetic: unknown key '" + key + "'");
    }
  }
  if (!has_n || !has_m) throw ConfigError("synthetic: both n and m are required");
  if (spec.n == 0 || spec.m == 0) throw ConfigError("synthetic: n and m must be positive");
  if (!(spec.scale > 0.0)) throw ConfigError("synthetic: scale must be positive");
  if (!(spec.separability >= 0.0)) throw ConfigError("synthetic: sep must be nonnegative");
  return spec;
}

std::string SyntheticSpec::to_string() const {
  std::ostringstream os;
  os << "n=" << n << ",m=" << m;
  if (seed) os << ",seed=" << *seed;
  os << ",sep=" << format_real(separability) << ",scale=" << format_real(scale);
  return os.str();
}

void RunConfig::validate() const {
  if (dataset.has_value() == synthetic.has_value()) {
    throw ConfigError("exactly one of a dataset path and a synthetic spec is required");
  }
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (workers > 1 && algorithm != Algorithm::dagqn) throw ConfigError("--workers > 1 needs --algo dagqn");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (profile == ConstantsProfile::explicit_values && (!mu || !omega || !lipschitz)) {
    throw ConfigError("the explicit profile needs --mu, --omega and --L");
  }
}

bool RunConfig::same_problem(const RunConfig& o) const {
  return dataset == o.dataset && synthetic == o.synthetic && features == o.features && gamma == o.gamma &&
         seed == o.seed;
}

int exit_code_for(const SolverResult& result) { return result.converged() ? 0 : 2; }

Dataset load_data(const RunConfig& config) {
  if (config.dataset) return load_libsvm(*config.dataset, config.features);
  const SyntheticSpec& s = *config.synthetic;
  Dataset d = synthesize(s.n, s.m, s.seed.value_or(config.seed), s.separability);
  if (s.scale != 1.0) d.features *= s.scale;
  if (config.features && *config.features > d.dim()) {
    RowMatrix wide = RowMatrix::Zero(d.features.rows(), static_cast<Eigen::Index>(*config.features));
    wide.leftCols(d.features.cols()) = d.features;
    d.features = std::move(wide);
  }
  return d;
}

Vector initial_point(std::size_t n, std::uint64_t seed) {
  // Offset so that x0 is not drawn from the same stream as synthetic data.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(static_cast<Eigen::Index>(n));
  for (auto& v : x) v = normal(rng);
  return x;
}

SmoothnessConstants resolve_constants(const RunConfig& config, const LogisticProblem& problem,
                                      double samples_per_worker) {
  SmoothnessConstants base;
  switch (config.profile) {
    case ConstantsProfile::paper:
      base = paper_constants_preset(samples_per_worker);
      break;
    case ConstantsProfile::computed:
      base = computed_constants(problem);
      break;
    case ConstantsProfile::explicit_values:
      break;
  }
  const double mu = config.mu.value_or(base.mu);
  const double omega = config.omega.value_or(base.omega);
  const double l = config.lipschitz.value_or(base.lipschitz);
  // The paper profile fixes M; otherwise M follows L / mu^{3/2}.
  std::optional<double> m = config.self_concordance;
  if (!m && config.profile == ConstantsProfile::paper) m = base.self_concordance;
  try {
    return SmoothnessConstants::make(mu, omega, l, m);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("constants: ") + e.what());
  }
}

RunOutcome run(const RunConfig& config, std::ostream* csv) {
  config.validate();
  const Dataset data = load_data(config);
  const LogisticProblem full = make_problem(data, config.gamma);
  const Vector x0 = initial_point(data.dim(), config.seed);
  const auto start = std::chrono::steady_clock::now();

  RunOutcome out;
  switch (config.algorithm) {
    case Algorithm::agqn: {
      out.constants = resolve_constants(config, full, static_cast<double>(data.sample_count()));
      const LogisticObjective obj(full, out.constants);
      AgqnConfig c;
      c.tau = config.tau;
      c.tol = config.tol;
      c.max_iters = config.max_iters;
      c.variant = config.variant;
      c.init = config.init;
      c.diagnostics = config.diagnostics;
      out.result = agqn_run(obj, x0, c);
      break;
    }
    case Algorithm::dagqn: {
      std::vector<LogisticObjective> shards = partition_shards(data, config.workers, config.gamma);
      const double per_worker = static_cast<double>(data.sample_count()) / static_cast<double>(config.workers);
      std::vector<SmoothnessConstants> each;
      for (const auto& s : shards) each.push_back(resolve_constants(config, s.problem(), per_worker));
      for (std::size_t i = 0; i < shards.size(); ++i) shards[i].set_constants(each[i]);
      std::vector<const Objective*> ptrs;
      for (const auto& s : shards) ptrs.push_back(&s);
      out.constants = combine_constants(ptrs);
      DagqnConfig c;
      c.tau = config.tau;
      c.tol = config.tol;
      c.max_iters = config.max_iters;
      c.variant = config.variant;
      c.init = config.init;
      c.diagnostics = config.diagnostics;
      c.parallel_workers = config.parallel_workers;
      c.constants = out.constants;
      DagqnResult r = dagqn_run(ptrs, x0, c);
      comm_account(r.stats, data.dim(), config.tau, config.workers);
      out.result = std::move(r.result);
      out.stats = r.stats;
      break;
    }
    case Algorithm::nagd: {
      out.constants = resolve_constants(config, full, static_cast<double>(data.sample_count()));
      const LogisticObjective obj(full, out.constants);
      NagdConfig c;
      c.tol = config.tol;
      c.max_iters = config.max_iters;
      out.result = nagd_run(obj, x0, c);
      break;
    }
    case Algorithm::bfgs: {
      out.constants = resolve_constants(config, full, static_cast<double>(data.sample_count()));
      const LogisticObjective obj(full, out.constants);
      WolfeConfig c;
      c.tol = config.tol;
      c.max_iters = config.max_iters;
      out.result = bfgs_wolfe_run(obj, x0, c);
      break;
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.exit_code = exit_code_for(out.result);
  out.summary = summary_line(config, out);

  if (config.out) {
    std::ofstream file(*config.out);
    if (!file) throw Error("cannot write trace to '" + *config.out + "'");
    write_trace_csv(file, out.result);
    if (!file) throw Error("write to '" + *config.out + "' failed");
  } else if (csv) {
    write_trace_csv(*csv, out.result);
  }
  return out;
}

int compare(const std::vector<RunConfig>& configs, std::ostream& csv, std::ostream& summary) {
  if (configs.size() < 2) throw ConfigError("compare needs at least two configurations");
  for (const auto& c : configs) {
    c.validate();
    if (!c.same_problem(configs.front())) throw ConfigError("compare: configurations refer to different problems");
    if (c.out) throw ConfigError("compare: per-run output paths are not supported");
  }
  csv << "algorithm,tau,workers,iter,f,grad_norm,hvp_calls,comm_rounds,scalars_pushed\n";
  bool all_converged = true;
  for (const auto& c : configs) {
    const RunOutcome o = run(c);
    const bool quasi_newton = c.algorithm == Algorithm::agqn || c.algorithm == Algorithm::dagqn;
    for (const auto& r : o.result.trace) {
      csv << to_string(c.algorithm) << ',';
      if (quasi_newton) csv << c.tau;
      csv << ',' << c.workers << ',' << r.k << ',' << format_real(r.f) << ',' << format_real(r.grad_norm) << ','
          << r.hvp_calls << ',' << r.comm_rounds << ',' << r.scalars_pushed << '\n';
    }
    summary << o.summary << '\n';
    all_converged = all_converged && o.result.converged();
  }
  return all_converged ? 0 : 2;
}

}  // namespace greedyqn
