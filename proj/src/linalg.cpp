#include "greedyqn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

bool bytes_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

bool SymRank2::is_zero() const {
  return basis.size() == 0 || coeffs.isZero(0.0) || basis.isZero(0.0);
}

SymMatrix::SymMatrix(Matrix entries) : a_(std::move(entries)) {
  if (a_.rows() != a_.cols()) throw InvalidArgument("SymMatrix: matrix is not square");
  symmetrize();
}

SymMatrix SymMatrix::identity(std::size_t n, double scale) {
  const auto m = static_cast<Eigen::Index>(n);
  return SymMatrix(scale * Matrix::Identity(m, m));
}

Vector SymMatrix::operator*(const Vector& v) const {
  if (v.size() != a_.cols()) throw InvalidArgument("SymMatrix: dimension mismatch in product");
  return a_ * v;
}

void SymMatrix::scale(double c) { a_ *= c; }

void SymMatrix::add(const SymRank2& update) {
  if (update.is_zero()) return;
  if (update.basis.rows() != a_.rows()) throw InvalidArgument("SymMatrix: update dimension mismatch");
  a_.noalias() += update.basis * update.coeffs * update.basis.transpose();
  symmetrize();
}

bool SymMatrix::bitwise_equal(const SymMatrix& other) const { return bytes_equal(a_, other.a_); }

void SymMatrix::symmetrize() {
  const Matrix t = a_.transpose();
  a_ = 0.5 * (a_ + t);
}

SpdFactor::SpdFactor(const SymMatrix& a, std::size_t refactor_period) : period_(refactor_period) {
  if (period_ == 0) throw InvalidArgument("SpdFactor: refactor period must be positive");
  refactor(a);
}

void SpdFactor::refactor(const SymMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.order());
  Matrix l = Matrix::Zero(n, n);
  const Matrix& src = a.dense();
  double largest = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = src(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw NotPositiveDefinite("SpdFactor: nonpositive pivot " + std::to_string(pivot) + " at index " +
                                    std::to_string(j),
                                static_cast<std::size_t>(j));
    }
    largest = std::max(largest, pivot);
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    if (j + 1 < n) {
      const Eigen::Index rest = n - j - 1;
      l.col(j).tail(rest) =
          (src.col(j).tail(rest) - l.bottomLeftCorner(rest, j) * l.row(j).head(j).transpose()) / ljj;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (l(j, j) * l(j, j) <= kPivotRatio * largest) {
      throw NotPositiveDefinite("SpdFactor: pivot " + std::to_string(j) + " below tolerance",
                                static_cast<std::size_t>(j));
    }
  }
  l_ = std::move(l);
  updates_ = 0;
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != l_.rows()) throw InvalidArgument("SpdFactor: dimension mismatch in solve");
  Vector y = l_.triangularView<Eigen::Lower>().solve(b);
  l_.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
  return y;
}

Matrix SpdFactor::solve(const Matrix& b) const {
  if (b.rows() != l_.rows()) throw InvalidArgument("SpdFactor: dimension mismatch in solve");
  Matrix y = l_.triangularView<Eigen::Lower>().solve(b);
  l_.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
  return y;
}

void SpdFactor::rank1(double coeff, Vector v) {
  if (coeff == 0.0) return;
  const Eigen::Index n = l_.rows();
  const double sign = coeff > 0.0 ? 1.0 : -1.0;
  v *= std::sqrt(std::abs(coeff));
  const double largest = l_.diagonal().array().square().maxCoeff();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = l_(k, k);
    const double r2 = lkk * lkk + sign * v(k) * v(k);
    if (!(r2 > kPivotRatio * largest)) {
      throw DegenerateUpdate("SpdFactor: update loses positive definiteness at pivot " + std::to_string(k),
                             static_cast<std::size_t>(k));
    }
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = v(k) / lkk;
    l_(k, k) = r;
    if (k + 1 < n) {
      const Eigen::Index rest = n - k - 1;
      auto col = l_.col(k).tail(rest);
      auto w = v.tail(rest);
      col = (col + sign * s * w) / c;
      w = c * w - s * col;
    }
  }
}

bool SpdFactor::rank2_update(const SymRank2& update, const SymMatrix& perturbed) {
  if (update.is_zero()) return false;
  if (update.basis.rows() != l_.rows() || perturbed.order() != order()) {
    throw InvalidArgument("SpdFactor: update dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(update.coeffs);
  const Eigen::Vector2d lambda = eig.eigenvalues();
  const Eigen::Matrix2d q = eig.eigenvectors();
  // Positive terms first: the intermediate matrix then dominates the target.
  int order[2] = {0, 1};
  if (lambda(1) > lambda(0)) std::swap(order[0], order[1]);
  Matrix backup = l_;
  try {
    for (int t : order) {
      if (lambda(t) == 0.0) continue;
      rank1(lambda(t), update.basis * q.col(t));
    }
  } catch (...) {
    l_ = std::move(backup);
    throw;
  }
  if (++updates_ >= period_) {
    refactor(perturbed);
    return true;
  }
  return false;
}

void SpdFactor::scale(double c) {
  if (!(c > 0.0)) throw InvalidArgument("SpdFactor: scale must be positive");
  l_ *= std::sqrt(c);
}

bool SpdFactor::bitwise_equal(const SpdFactor& other) const {
  return updates_ == other.updates_ && bytes_equal(l_, other.l_);
}

double weighted_norm(const Vector& h, const Vector& ah) {
  if (h.size() != ah.size()) throw InvalidArgument("weighted_norm: dimension mismatch");
  const double q = h.dot(ah);
  if (q < -1e-12 * h.squaredNorm()) {
    throw NotPositiveSemidefinite("weighted_norm: negative quadratic form " + std::to_string(q));
  }
  return std::sqrt(std::max(q, 0.0));
}

double dual_norm(const Vector& h, const SpdFactor& factor) {
  if (static_cast<std::size_t>(h.size()) != factor.order()) {
    throw InvalidArgument("dual_norm: dimension mismatch");
  }
  return weighted_norm(h, factor.solve(h));
}

double trace_inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.order() != b.order()) throw InvalidArgument("trace_inner: dimension mismatch");
  return (a.dense().array() * b.dense().transpose().array()).sum();
}

SpdFactor update_factor_rank2(SpdFactor factor, const SymRank2& update, const SymMatrix& perturbed) {
  factor.rank2_update(update, perturbed);
  return factor;
}

}  // namespace greedyqn
