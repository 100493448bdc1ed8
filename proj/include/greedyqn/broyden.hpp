#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greedyqn/linalg.hpp"

namespace greedyqn {

/// Member of the Broyden family: phi * DFP + (1 - phi) * SR1.
struct BroydenVariant {
  enum class Kind { sr1, dfp, bfgs, fixed };

  Kind kind = Kind::bfgs;
  double phi = 0.0;  // only read for Kind::fixed

  static BroydenVariant sr1() { return {Kind::sr1, 0.0}; }
  static BroydenVariant dfp() { return {Kind::dfp, 1.0}; }
  static BroydenVariant bfgs() { return {Kind::bfgs, 0.0}; }
  static BroydenVariant fixed(double phi);
  static BroydenVariant parse(const std::string& name);

  std::string name() const;
};

/// Symmetric positive-definite Hessian estimate G together with its diagonal
/// (maintained incrementally) and a Cholesky factor kept in sync by low-rank
/// updates.
class HessianEstimate {
 public:
  HessianEstimate() = default;
  explicit HessianEstimate(SymMatrix g, std::size_t refactor_period = SpdFactor::kDefaultRefactorPeriod);

  static HessianEstimate scaled_identity(std::size_t n, double scale);

  std::size_t order() const { return g_.order(); }
  const SymMatrix& matrix() const { return g_; }
  const Vector& diag() const { return diag_; }
  const SpdFactor& factor() const { return factor_; }
  std::size_t generation() const { return generation_; }

  void apply(const SymRank2& update);
  void scale(double c);

  /// Byte-level equality of matrix, diagonal, factor and counters.
  bool bitwise_equal(const HessianEstimate& other) const;

 private:
  SymMatrix g_;
  Vector diag_;
  SpdFactor factor_;
  std::size_t generation_ = 0;
};

/// Access to a Hessian A through its diagonal and Hessian-vector products.
class HessianOracle {
 public:
  using DiagonalFn = std::function<Vector()>;
  using ProductFn = std::function<Vector(const Vector&)>;

  HessianOracle(std::size_t n, DiagonalFn diagonal, ProductFn product);

  /// Oracle over an explicit matrix, for tests and diagnostics.
  static HessianOracle from_matrix(SymMatrix a);

  std::size_t order() const { return n_; }
  /// Diagonal of A; pulled once and cached.
  const Vector& diagonal();
  Vector hvp(const Vector& u);
  Vector hvp_unit(std::size_t index);
  std::size_t hvp_calls() const { return hvp_calls_; }

 private:
  std::size_t n_;
  DiagonalFn diagonal_fn_;
  ProductFn product_fn_;
  std::optional<Vector> diagonal_;
  std::size_t hvp_calls_ = 0;
};

/// Greedy direction (0-based unit-vector index) and the product A e_index.
struct GreedyRecord {
  std::size_t index = 0;
  Vector hvp;
};

struct RefineResult {
  HessianEstimate estimate;
  std::vector<GreedyRecord> records;
};

struct CorrectionResult {
  HessianEstimate estimate;
  GreedyRecord record;
};

/// Hessian-error budget eps with its cap eps0.
struct ErrorBudget {
  double eps = 0.0;
  double eps0 = 0.0;

  static ErrorBudget make(double eps, double eps0);
};

// Broyden updates along the unit vector e_u, given Au = A e_u.
HessianEstimate sr1(HessianEstimate g, std::size_t u, const Vector& au);
HessianEstimate dfp(HessianEstimate g, std::size_t u, const Vector& au);
HessianEstimate bfgs(HessianEstimate g, std::size_t u, const Vector& au);
HessianEstimate broyd(const BroydenVariant& variant, HessianEstimate g, std::size_t u, const Vector& au);

/// The symmetric rank-2 perturbation broyd would add to G (zero when skipped).
SymRank2 broyd_perturbation(const BroydenVariant& variant, const HessianEstimate& g, std::size_t u,
                            const Vector& au);

/// argmax_i g_diag[i] / a_diag[i], ties to the smallest index.
std::size_t greedy_vector(const Vector& g_diag, const Vector& a_diag);

HessianEstimate gbroyd(HessianEstimate g, HessianOracle& oracle, const BroydenVariant& variant);
GreedyRecord gbroyd_step(HessianEstimate& g, HessianOracle& oracle, const BroydenVariant& variant);
RefineResult gbroyd_tau(HessianEstimate g, HessianOracle& oracle, std::size_t tau, const BroydenVariant& variant);

/// Scales G by (1 + M r_plus).
void apply_correction_scaling(HessianEstimate& g, double r_plus, double m);

CorrectionResult corrected_update_recorded(HessianEstimate g, double r_plus, double m, HessianOracle& oracle_plus,
                                           const BroydenVariant& variant);
HessianEstimate corrected_update(HessianEstimate g, double r_plus, double m, HessianOracle& oracle_plus,
                                 const BroydenVariant& variant);

/// <A^{-1}, G> - n.
double sigma_metric(const HessianEstimate& g, const SpdFactor& a_factor);
double sigma_metric(const SymMatrix& g, const SpdFactor& a_factor);

/// Sum of blockwise sigma metrics.
double delta_metric(std::span<const HessianEstimate> estimates, std::span<const SpdFactor> hessian_factors);

}  // namespace greedyqn
