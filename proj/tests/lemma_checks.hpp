#pragma once

// Per-iteration checks of the convergence inequalities against a diagnostic
// trace. Shared by the unit tests and the acceptance binary.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "greedyqn/trace.hpp"

namespace lemma {

struct CheckStats {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max(lhs - rhs)
  std::string first_violation;

  bool ok() const { return violations == 0; }

  void record(std::size_t k, double lhs, double rhs, double tol) {
    ++checked;
    worst_excess = std::max(worst_excess, lhs - rhs);
    if (lhs > rhs + tol) {
      if (violations == 0) {
        std::ostringstream os;
        os << "k=" << k << " lhs=" << lhs << " rhs=" << rhs;
        first_violation = os.str();
      }
      ++violations;
    }
  }

  void merge(const CheckStats& o) {
    checked += o.checked;
    worst_excess = std::max(worst_excess, o.worst_excess);
    if (violations == 0 && o.violations > 0) first_violation = o.first_violation;
    violations += o.violations;
  }
};

/// The Hessian-error measure of a record: delta for distributed runs, sigma otherwise.
inline double error_of(const greedyqn::IterationRecord& r) { return r.delta ? *r.delta : r.sigma.value(); }

/// Budget preservation: error_k <= eps and alpha_k <= alpha_tau,k imply error_{k+1} <= eps.
inline CheckStats check_budget(const greedyqn::SolverResult& r, double eps, double tol = 1e-8) {
  CheckStats s;
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const auto& a = r.trace[k];
    if (error_of(a) <= eps && a.alpha && *a.alpha <= *a.alpha_tau) s.record(k, error_of(r.trace[k + 1]), eps, tol);
  }
  return s;
}

/// Two-case beta descent, valid while the error stays within eps.
inline CheckStats check_beta_descent(const greedyqn::SolverResult& r, double eps, double tol = 1e-8) {
  CheckStats s;
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const auto& a = r.trace[k];
    if (!(error_of(a) <= eps) || !a.alpha) continue;
    const double b = *a.beta;
    const double bar = std::min(*a.alpha_tau, 1.0);
    const double bound = b > 1.0 / (4.0 * bar) ? b - 1.0 / 16.0 : (1.0 - bar / 4.0) * b;
    s.record(k, *r.trace[k + 1].beta, bound, tol);
  }
  return s;
}

/// beta+ <= (1 - alpha/2) beta + beta^2 alpha^2 under the same condition.
inline CheckStats check_quadratic_beta(const greedyqn::SolverResult& r, double eps, double tol = 1e-8) {
  CheckStats s;
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const auto& a = r.trace[k];
    if (!(error_of(a) <= eps) || !a.alpha) continue;
    const double b = *a.beta;
    const double al = *a.alpha;
    s.record(k, *r.trace[k + 1].beta, (1.0 - al / 2.0) * b + b * b * al * al, tol);
  }
  return s;
}

/// Local linear rate lambda+ <= 3/4 lambda on unit steps with error <= eps0
/// and m_eff * lambda <= 1/4.
inline CheckStats check_local_rate(const greedyqn::SolverResult& r, double eps0, double m_eff, double tol = 1e-10) {
  CheckStats s;
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const auto& a = r.trace[k];
    if (!a.alpha || *a.alpha != 1.0 || !(error_of(a) <= eps0) || !(m_eff * *a.lambda <= 0.25)) continue;
    s.record(k, *r.trace[k + 1].lambda, 0.75 * *a.lambda, tol);
  }
  return s;
}

/// Per-round aggregate bound after refinement and correction:
/// delta+ <= rho (1 + M r)^2 (delta + 2 n sqrt(p) M r / (1 + M r)), with r
/// the master-side step length. Refinement only shrinks delta, so the
/// pre-refinement delta in the trace gives an implied bound for every tau.
inline CheckStats check_correction_bound(const greedyqn::SolverResult& r, std::size_t n, std::size_t p, double rho,
                                         double m, double tol = 1e-8) {
  CheckStats s;
  const double np = static_cast<double>(n) * std::sqrt(static_cast<double>(p));
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const auto& a = r.trace[k];
    if (!a.r_next) continue;
    const double mr = m * *a.r_next;
    const double bound = rho * (1.0 + mr) * (1.0 + mr) * (error_of(a) + 2.0 * np * mr / (1.0 + mr));
    s.record(k, error_of(r.trace[k + 1]), bound, tol);
  }
  return s;
}

/// The last `count` ratios lambda_{k+1} / lambda_k (over positive lambdas)
/// are strictly decreasing.
inline bool tail_superlinear(const greedyqn::SolverResult& r, std::size_t count = 3) {
  std::vector<double> lambdas;
  for (const auto& rec : r.trace) {
    if (rec.lambda && *rec.lambda > 0.0) lambdas.push_back(*rec.lambda);
  }
  if (lambdas.size() < count + 2) return false;
  std::vector<double> ratios;
  for (std::size_t i = lambdas.size() - count - 1; i + 1 < lambdas.size(); ++i) {
    ratios.push_back(lambdas[i + 1] / lambdas[i]);
  }
  for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
    if (!(ratios[i + 1] < ratios[i])) return false;
  }
  return true;
}

}  // namespace lemma
