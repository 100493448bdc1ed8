#include "greedyqn/agqn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

void check_kappa(std::size_t n, double kappa) {
  if (n == 0) throw InvalidArgument("dimension must be positive");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw InvalidArgument("condition number must be finite and >= 1, got " + std::to_string(kappa));
  }
}

// rho = 1 - 1/(n kappa) and 1 - rho^{tau+1}, the latter without cancellation.
struct Contraction {
  double rho;
  double one_minus_rho_pow;  // 1 - rho^{tau+1}
  double rho_pow_tau;        // rho^tau
};

Contraction contraction(std::size_t tau, std::size_t n, double kappa) {
  const double q = 1.0 / (static_cast<double>(n) * kappa);
  const double log_rho = std::log1p(-q);
  Contraction c;
  c.rho = 1.0 - q;
  c.one_minus_rho_pow = -std::expm1(static_cast<double>(tau + 1) * log_rho);
  c.rho_pow_tau = std::exp(static_cast<double>(tau) * log_rho);
  return c;
}

double effective_dim(std::size_t n, std::size_t workers) {
  return static_cast<double>(n) * std::sqrt(static_cast<double>(workers));
}

}  // namespace

double epsilon0(double kappa) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw InvalidArgument("condition number must be finite and >= 1");
  }
  return 1.0 / (2.0 * kappa - 1.0);
}

double c_tau_eps(std::size_t tau, double eps, std::size_t n, double kappa, std::size_t workers) {
  check_kappa(n, kappa);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be finite and >= 0");
  if (workers == 0) throw InvalidArgument("worker count must be positive");
  if (eps == 0.0) return 0.0;
  if (kappa == 1.0 && n == 1) {
    // rho = 0: the quadratic degenerates to 0 c^2 + 0 c - eps = 0 and no
    // finite root exists; any stepsize keeps the (zero) error.
    return std::numeric_limits<double>::infinity();
  }
  const Contraction k = contraction(tau, n, kappa);
  const double np = effective_dim(n, workers);
  const double sigma = k.rho_pow_tau * eps + np;
  const double d = k.one_minus_rho_pow * eps;
  // Positive root of a c^2 + 2 b c - d with a = rho (sigma + np), b = rho sigma,
  // written as d / (b + sqrt(b^2 + a d)).
  const double a = k.rho * (sigma + np);
  const double b = k.rho * sigma;
  return d / (b + std::sqrt(b * b + a * d));
}

StepsizePolicy StepsizePolicy::make(std::size_t n, const SmoothnessConstants& constants, std::size_t tau,
                                    std::optional<double> eps, std::size_t workers) {
  const double kappa = constants.kappa();
  check_kappa(n, kappa);
  if (workers == 0) throw InvalidArgument("worker count must be positive");
  StepsizePolicy p;
  p.n = n;
  p.tau = tau;
  p.workers = workers;
  const double e0 = epsilon0(kappa);
  p.budget = ErrorBudget::make(eps.value_or(e0), e0);
  const Contraction k = contraction(tau, n, kappa);
  p.rho = k.rho;
  p.sigma_tau = k.rho_pow_tau * p.budget.eps + effective_dim(n, workers);
  p.c = c_tau_eps(tau, p.budget.eps, n, kappa, workers);
  p.constants = constants;
  return p;
}

double alpha_tau(const StepsizePolicy& policy, const Vector& grad, const SpdFactor& g_factor) {
  const double m = policy.constants.self_concordance;
  const double inf = std::numeric_limits<double>::infinity();
  if (m == 0.0 || grad.isZero(0.0)) return inf;
  const double dn = dual_norm(grad, g_factor);
  if (dn == 0.0) return inf;
  return policy.c / (m * dn);
}

double beta(double grad_norm, const SmoothnessConstants& constants, std::size_t workers) {
  if (workers == 0) throw InvalidArgument("worker count must be positive");
  const double mu = constants.mu;
  return constants.lipschitz * grad_norm / (2.0 * static_cast<double>(workers) * mu * mu);
}

StepChoice adaptive_step(const StepsizePolicy& policy, const Vector& grad, const SpdFactor& g_factor) {
  StepChoice s;
  s.alpha_tau = alpha_tau(policy, grad, g_factor);
  s.beta = beta(grad.norm(), policy.constants, policy.workers);
  double alpha = std::min(s.alpha_tau, 1.0);
  if (s.beta > 0.0) alpha = std::min(alpha, 1.0 / (4.0 * s.beta));
  if (!(alpha > 0.0)) {
    throw DegenerateStepsize("adaptive stepsize is " + format_real(alpha) + " (alpha_tau=" +
                             format_real(s.alpha_tau) + ", beta=" + format_real(s.beta) +
                             ", c=" + format_real(policy.c) + ")");
  }
  s.alpha = alpha;
  return s;
}

double lambda_metric(const Objective& objective, const Vector& x) {
  const Vector g = objective.gradient(x);
  if (g.isZero(0.0)) return 0.0;
  const SpdFactor h(objective.explicit_hessian(x));
  return dual_norm(g, h);
}

std::size_t warm_start_steps(std::size_t n, double kappa, double eps) {
  check_kappa(n, kappa);
  if (!(eps > 0.0)) throw InvalidArgument("warm start needs eps > 0");
  const double sigma0 = static_cast<double>(n) * (kappa - 1.0);
  if (sigma0 <= eps) return 0;
  const double q = 1.0 / (static_cast<double>(n) * kappa);
  // ln(1/rho) = -log1p(-q)
  const double steps = std::log(sigma0 / eps) / -std::log1p(-q);
  return static_cast<std::size_t>(std::ceil(steps));
}

HessianEstimate warm_start_G0(const Objective& objective, const Vector& x0, double eps,
                              const BroydenVariant& variant, std::size_t* hvp_calls) {
  return warm_start_G0(objective, objective.constants(), x0, eps, variant, hvp_calls);
}

HessianEstimate warm_start_G0(const Objective& objective, const SmoothnessConstants& constants, const Vector& x0,
                              double eps, const BroydenVariant& variant, std::size_t* hvp_calls) {
  const std::size_t n = objective.dim();
  const std::size_t steps = warm_start_steps(n, constants.kappa(), eps);
  HessianOracle oracle = make_oracle(objective, x0);
  HessianEstimate g = HessianEstimate::scaled_identity(n, constants.omega);
  for (std::size_t i = 0; i < steps; ++i) gbroyd_step(g, oracle, variant);
  if (hvp_calls) *hvp_calls = oracle.hvp_calls();
  return g;
}

SolverResult agqn_run(const Objective& objective, const Vector& x0, const AgqnConfig& config) {
  const std::size_t n = objective.dim();
  if (static_cast<std::size_t>(x0.size()) != n) throw InvalidArgument("x0 has the wrong dimension");
  if (!(config.tol > 0.0)) throw InvalidArgument("tol must be positive");
  const SmoothnessConstants& constants = objective.constants();
  const StepsizePolicy policy = StepsizePolicy::make(n, constants, config.tau, config.eps);
  const double m = constants.self_concordance;

  SolverResult result;
  HessianEstimate g;
  if (config.g0) {
    if (config.g0->order() != n) throw InvalidArgument("G0 has the wrong order");
    g = *config.g0;
  } else if (config.init == InitPolicy::warm_start) {
    g = warm_start_G0(objective, x0, policy.budget.eps, config.variant, &result.setup_hvp_calls);
  } else {
    g = HessianEstimate::scaled_identity(n, constants.omega);
  }

  Vector x = x0;
  std::size_t hvp_total = 0;
  for (std::size_t k = 0;; ++k) {
    const Vector grad = objective.gradient(x);
    ++result.gradient_evals;
    IterationRecord rec;
    rec.k = k;
    rec.f = objective.value(x);
    ++result.function_evals;
    rec.grad_norm = grad.norm();
    rec.hvp_calls = hvp_total;
    if (config.diagnostics) {
      const SpdFactor h(objective.explicit_hessian(x));
      rec.sigma = sigma_metric(g, h);
      rec.lambda = grad.isZero(0.0) ? 0.0 : dual_norm(grad, h);
      rec.potential = *rec.sigma + 4.0 * static_cast<double>(n) * m * *rec.lambda;
    }
    if (config.record_iterates) result.iterates.push_back(x);

    if (rec.grad_norm <= config.tol || k == config.max_iters) {
      rec.beta = beta(rec.grad_norm, constants);
      result.trace.push_back(rec);
      result.termination =
          rec.grad_norm <= config.tol ? Termination::gradient_tolerance : Termination::max_iterations;
      result.iterations = k;
      break;
    }

    const StepChoice step = adaptive_step(policy, grad, g.factor());
    const Vector x_next = x - step.alpha * g.factor().solve(grad);
    if (!x_next.allFinite()) throw DegenerateStepsize("iterate became non-finite at k=" + std::to_string(k));

    HessianOracle here = make_oracle(objective, x);
    RefineResult refined = gbroyd_tau(std::move(g), here, config.tau, config.variant);
    const Vector s = x_next - x;
    const double r = weighted_norm(s, here.hvp(s));
    HessianOracle there = make_oracle(objective, x_next);
    g = corrected_update(std::move(refined.estimate), r, m, there, config.variant);
    hvp_total += here.hvp_calls() + there.hvp_calls();

    rec.alpha = step.alpha;
    rec.alpha_tau = step.alpha_tau;
    rec.beta = step.beta;
    rec.r_next = r;
    result.trace.push_back(rec);
    x = x_next;
  }
  result.x = x;
  result.hvp_calls = hvp_total;
  return result;
}

}  // namespace greedyqn
