#pragma once

#include <cstddef>
#include <optional>

#include "greedyqn/broyden.hpp"
#include "greedyqn/objective.hpp"
#include "greedyqn/trace.hpp"

namespace greedyqn {

/// Largest Hessian-error budget for which the adaptive descent bound holds:
/// 1 / (2 kappa - 1).
double epsilon0(double kappa);

/// Positive root c of rho (s + n') c^2 + 2 rho s c - (1 - rho^{tau+1}) eps = 0,
/// where rho = 1 - 1/(n kappa), s = rho^tau eps + n' and n' = n sqrt(workers).
double c_tau_eps(std::size_t tau, double eps, std::size_t n, double kappa, std::size_t workers = 1);

/// Constants and derived quantities that fix the adaptive stepsize rule.
struct StepsizePolicy {
  std::size_t n = 0;
  std::size_t tau = 0;
  std::size_t workers = 1;
  ErrorBudget budget;
  double rho = 0.0;
  double sigma_tau = 0.0;
  double c = 0.0;
  SmoothnessConstants constants;

  /// eps defaults to eps0. In the distributed case `constants` are the
  /// per-worker ones and sigma_tau carries the n sqrt(p) term.
  static StepsizePolicy make(std::size_t n, const SmoothnessConstants& constants, std::size_t tau,
                             std::optional<double> eps = std::nullopt, std::size_t workers = 1);
};

/// c / (M |grad|*_G); +infinity when M = 0 or grad = 0.
double alpha_tau(const StepsizePolicy& policy, const Vector& grad, const SpdFactor& g_factor);

/// L |grad| / (2 p mu^2).
double beta(double grad_norm, const SmoothnessConstants& constants, std::size_t workers = 1);

struct StepChoice {
  double alpha = 0.0;
  double alpha_tau = 0.0;
  double beta = 0.0;
};

/// alpha = min{alpha_tau, 1 / (4 beta), 1}.
StepChoice adaptive_step(const StepsizePolicy& policy, const Vector& grad, const SpdFactor& g_factor);

/// sqrt(grad^T Hess^{-1} grad) with the explicit Hessian.
double lambda_metric(const Objective& objective, const Vector& x);

/// ceil(ln(n (kappa - 1) / eps) / ln(1 / rho)), or 0 when n (kappa - 1) <= eps.
std::size_t warm_start_steps(std::size_t n, double kappa, double eps);

/// omega I refined by warm_start_steps greedy updates at x0, which drives
/// sigma below eps at x0.
HessianEstimate warm_start_G0(const Objective& objective, const Vector& x0, double eps,
                              const BroydenVariant& variant = BroydenVariant::bfgs(),
                              std::size_t* hvp_calls = nullptr);
HessianEstimate warm_start_G0(const Objective& objective, const SmoothnessConstants& constants, const Vector& x0,
                              double eps, const BroydenVariant& variant = BroydenVariant::bfgs(),
                              std::size_t* hvp_calls = nullptr);

enum class InitPolicy { omega_identity, warm_start };

struct AgqnConfig {
  std::size_t tau = 6;
  std::optional<double> eps;  // defaults to eps0
  double tol = 1e-9;
  std::size_t max_iters = 500;
  BroydenVariant variant = BroydenVariant::bfgs();
  InitPolicy init = InitPolicy::omega_identity;
  std::optional<HessianEstimate> g0;  // overrides `init`
  bool diagnostics = false;
  bool record_iterates = false;
};

/// Line-search-free adaptive greedy quasi-Newton method.
SolverResult agqn_run(const Objective& objective, const Vector& x0, const AgqnConfig& config);

}  // namespace greedyqn
