#pragma once

#include <cstddef>
#include <optional>

#include "greedyqn/objective.hpp"
#include "greedyqn/trace.hpp"

namespace greedyqn {

struct NagdConfig {
  std::optional<double> step;      // defaults to 1 / omega
  std::optional<double> momentum;  // defaults to (sqrt(kappa) - 1) / (sqrt(kappa) + 1)
  double tol = 1e-9;
  std::size_t max_iters = 10000;
  /// Abort when f(x^k) exceeds f(x^0) + divergence_factor * max(1, |f(x^0)|).
  double divergence_factor = 10.0;
  bool record_iterates = false;
};

/// Nesterov's accelerated gradient method for strongly convex functions.
/// The trace reports f and |grad f| at the main sequence x^k.
SolverResult nagd_run(const Objective& objective, const Vector& x0, const NagdConfig& config = {});

struct WolfeConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_trials = 50;
  double tol = 1e-9;
  std::size_t max_iters = 1000;
  std::optional<Matrix> h0;  // initial inverse Hessian; default I, rescaled after the first step
  bool record_iterates = false;

  void validate() const;
};

struct LineSearchResult {
  double alpha = 0.0;
  double f = 0.0;
  Vector gradient;
  std::size_t trials = 0;
};

/// Round-off allowance on f used by the sufficient-decrease test.
double armijo_slack(double f);

/// Bracketing and zoom search for a step satisfying the strong Wolfe
/// conditions along descent direction d. Throws LineSearchFailure after
/// `max_trials` evaluations.
LineSearchResult wolfe_line_search(const Objective& objective, const Vector& x, double f, const Vector& grad,
                                   const Vector& d, const WolfeConfig& config);

/// H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T with rho = 1 / y^T s.
Matrix bfgs_inverse_update(const Matrix& h, const Vector& s, const Vector& y);

/// Secant BFGS on the inverse Hessian with a Wolfe line search.
SolverResult bfgs_wolfe_run(const Objective& objective, const Vector& x0, const WolfeConfig& config = {});

}  // namespace greedyqn
