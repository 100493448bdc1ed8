#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace greedyqn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Sample-major storage for datasets (one sample per row).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric perturbation basis * coeffs * basis^T with at most two columns.
struct SymRank2 {
  Eigen::Matrix<double, Eigen::Dynamic, 2> basis;
  Eigen::Matrix2d coeffs = Eigen::Matrix2d::Zero();

  bool is_zero() const;
};

/// Dense symmetric matrix. Every mutation re-symmetrizes by averaging with the
/// transpose, so entries(i, j) == entries(j, i) holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix entries);

  static SymMatrix identity(std::size_t n, double scale = 1.0);

  std::size_t order() const { return static_cast<std::size_t>(a_.rows()); }
  const Matrix& dense() const { return a_; }
  double operator()(std::size_t i, std::size_t j) const {
    return a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  Vector diagonal() const { return a_.diagonal(); }
  Vector column(std::size_t j) const { return a_.col(static_cast<Eigen::Index>(j)); }
  Vector operator*(const Vector& v) const;

  void scale(double c);
  void add(const SymRank2& update);

  bool bitwise_equal(const SymMatrix& other) const;

 private:
  void symmetrize();

  Matrix a_;
};

/// Cholesky factor of an SPD matrix that supports O(n^2) rank-2 refreshes.
/// A full refactorization from the source matrix is forced every
/// `refactor_period` low-rank updates.
class SpdFactor {
 public:
  static constexpr std::size_t kDefaultRefactorPeriod = 50;
  /// Smallest pivot must exceed this fraction of the largest.
  static constexpr double kPivotRatio = 1e-12;

  SpdFactor() = default;
  explicit SpdFactor(const SymMatrix& a, std::size_t refactor_period = kDefaultRefactorPeriod);

  std::size_t order() const { return static_cast<std::size_t>(l_.rows()); }
  const Matrix& lower() const { return l_; }
  std::size_t updates_since_refactor() const { return updates_; }
  std::size_t refactor_period() const { return period_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  /// Applies `update`; `perturbed` must already hold source + update and is used
  /// when the periodic refactorization fires. Returns true when it did.
  bool rank2_update(const SymRank2& update, const SymMatrix& perturbed);
  void scale(double c);
  void refactor(const SymMatrix& a);

  bool bitwise_equal(const SpdFactor& other) const;

 private:
  void rank1(double coeff, Vector v);

  Matrix l_;
  std::size_t period_ = kDefaultRefactorPeriod;
  std::size_t updates_ = 0;
};

/// sqrt(<Ah, h>) from the pre-multiplied product Ah.
double weighted_norm(const Vector& h, const Vector& ah);

/// sqrt(<A^{-1} h, h>) through the factor of A.
double dual_norm(const Vector& h, const SpdFactor& factor);

/// Trace(A B).
double trace_inner(const SymMatrix& a, const SymMatrix& b);

SpdFactor update_factor_rank2(SpdFactor factor, const SymRank2& update, const SymMatrix& perturbed);

}  // namespace greedyqn
