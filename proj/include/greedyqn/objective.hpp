#pragma once

#include <cstddef>
#include <optional>

#include "greedyqn/broyden.hpp"
#include "greedyqn/linalg.hpp"

namespace greedyqn {

/// Explicit Hessians, inverses and eigenvalues are only formed up to this order.
inline constexpr std::size_t kDiagnosticMaxDim = 2000;

/// Strong convexity mu, smoothness omega, Hessian Lipschitz L and strong
/// self-concordance M.
struct SmoothnessConstants {
  double mu = 1.0;
  double omega = 1.0;
  double lipschitz = 0.0;
  double self_concordance = 0.0;

  double kappa() const { return omega / mu; }

  /// Validates; M defaults to L / mu^{3/2}.
  static SmoothnessConstants make(double mu, double omega, double lipschitz,
                                  std::optional<double> self_concordance = std::nullopt);
};

/// mu = 0.02 m, omega = m, L = 0.04 m, M = 2 (kappa = 50).
SmoothnessConstants paper_constants_preset(double m);

/// Smooth strongly convex objective accessed through values, gradients,
/// Hessian-vector products and the Hessian diagonal.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector hvp(const Vector& x, const Vector& u) const = 0;
  virtual Vector hessian_diag(const Vector& x) const = 0;
  /// Dense Hessian for diagnostics; throws DiagnosticGate above kDiagnosticMaxDim.
  virtual SymMatrix explicit_hessian(const Vector& x) const;

  const SmoothnessConstants& constants() const { return constants_; }
  void set_constants(const SmoothnessConstants& c) { constants_ = c; }

 protected:
  void check_dim(const Vector& v, const char* what) const;

  SmoothnessConstants constants_;
};

/// Oracle for the Hessian of `objective` at `x`.
HessianOracle make_oracle(const Objective& objective, const Vector& x);

struct LogisticProblem {
  RowMatrix samples;  // m x n
  Vector labels;      // entries in {-1, +1}
  double gamma = 1.0;

  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
  std::size_t sample_count() const { return static_cast<std::size_t>(samples.rows()); }
  void validate() const;
};

// Regularized logistic loss sum_j ln(1 + exp(-b_j <c_j, x>)) + gamma/2 |x|^2.
double logistic_eval(const LogisticProblem& problem, const Vector& x);
Vector logistic_grad(const LogisticProblem& problem, const Vector& x);
Vector logistic_hvp(const LogisticProblem& problem, const Vector& x, const Vector& u);
Vector logistic_hessian_diag(const LogisticProblem& problem, const Vector& x);

/// Largest eigenvalue of sum_j c_j c_j^T by power iteration.
double sample_gram_lambda_max(const LogisticProblem& problem);

/// mu = gamma, omega = gamma + lambda_max / 4, L from the sigmoid's third
/// derivative bound unless supplied, M = L / mu^{3/2} unless supplied.
SmoothnessConstants computed_constants(const LogisticProblem& problem, std::optional<double> lipschitz = std::nullopt,
                                       std::optional<double> self_concordance = std::nullopt);

class LogisticObjective final : public Objective {
 public:
  LogisticObjective(LogisticProblem problem, const SmoothnessConstants& constants);

  const LogisticProblem& problem() const { return problem_; }

  std::size_t dim() const override { return problem_.dim(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hvp(const Vector& x, const Vector& u) const override;
  Vector hessian_diag(const Vector& x) const override;
  SymMatrix explicit_hessian(const Vector& x) const override;

 private:
  LogisticProblem problem_;
};

/// f(x) = x^T A x / 2 - b^T x, with mu, omega the extreme eigenvalues of A
/// and L = M = 0.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(SymMatrix a, Vector b);

  const SymMatrix& hessian() const { return a_; }
  const Vector& linear_term() const { return b_; }
  Vector minimizer() const;

  std::size_t dim() const override { return a_.order(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hvp(const Vector& x, const Vector& u) const override;
  Vector hessian_diag(const Vector& x) const override;
  SymMatrix explicit_hessian(const Vector& x) const override;

 private:
  SymMatrix a_;
  Vector b_;
};

QuadraticObjective quadratic_objective(SymMatrix a, Vector b);

}  // namespace greedyqn
