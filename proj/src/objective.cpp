#include "greedyqn/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

// Largest |sigma''| of the logistic sigmoid, 1 / (6 sqrt 3).
constexpr double kSigmoidSecondDerivBound = 0.0962250448649376;

double softplus(double z) {
  if (z > 30.0) return z + std::log1p(std::exp(-z));
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Fixed index-order dot product; Eigen's vectorized reductions may reorder.
double row_dot(const RowMatrix& c, Eigen::Index j, const Vector& x) {
  const double* row = c.data() + j * c.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.cols(); ++i) acc += row[i] * x(i);
  return acc;
}

void add_scaled_row(Vector& out, double coef, const RowMatrix& c, Eigen::Index j) {
  const double* row = c.data() + j * c.cols();
  for (Eigen::Index i = 0; i < c.cols(); ++i) out(i) += coef * row[i];
}

double sq_norm(const Vector& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += x(i) * x(i);
  return acc;
}

void check_point(const LogisticProblem& p, const Vector& x, const char* op) {
  if (static_cast<std::size_t>(x.size()) != p.dim()) {
    throw InvalidArgument(std::string(op) + ": expected dimension " + std::to_string(p.dim()) + ", got " +
                          std::to_string(x.size()));
  }
}

// w_j = sigma(z) sigma(-z), the second derivative of the loss at z.
double curvature_weight(double z) { return sigmoid(z) * sigmoid(-z); }

}  // namespace

SmoothnessConstants SmoothnessConstants::make(double mu, double omega, double lipschitz,
                                              std::optional<double> self_concordance) {
  if (!(mu > 0.0)) throw InvalidArgument("constants: mu must be positive");
  if (!(omega >= mu)) throw InvalidArgument("constants: omega must be >= mu");
  if (!(lipschitz >= 0.0)) throw InvalidArgument("constants: L must be nonnegative");
  SmoothnessConstants c;
  c.mu = mu;
  c.omega = omega;
  c.lipschitz = lipschitz;
  c.self_concordance = self_concordance ? *self_concordance : lipschitz / std::pow(mu, 1.5);
  if (!(c.self_concordance >= 0.0)) throw InvalidArgument("constants: M must be nonnegative");
  return c;
}

SmoothnessConstants paper_constants_preset(double m) {
  if (!(m > 0.0)) throw InvalidArgument("paper preset: sample count must be positive");
  return SmoothnessConstants::make(0.02 * m, m, 0.04 * m, 2.0);
}

void Objective::check_dim(const Vector& v, const char* what) const {
  if (static_cast<std::size_t>(v.size()) != dim()) {
    throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(dim()) + ", got " +
                          std::to_string(v.size()));
  }
}

SymMatrix Objective::explicit_hessian(const Vector& x) const {
  const std::size_t n = dim();
  if (n > kDiagnosticMaxDim) throw DiagnosticGate("explicit Hessian requested above the diagnostic limit");
  check_dim(x, "explicit_hessian");
  Matrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    h.col(static_cast<Eigen::Index>(i)) = hvp(x, e);
  }
  return SymMatrix(std::move(h));
}

HessianOracle make_oracle(const Objective& objective, const Vector& x) {
  return HessianOracle(
      objective.dim(), [&objective, x] { return objective.hessian_diag(x); },
      [&objective, x](const Vector& u) { return objective.hvp(x, u); });
}

void LogisticProblem::validate() const {
  if (samples.rows() != labels.size()) throw InvalidArgument("logistic: sample/label count mismatch");
  if (!(gamma > 0.0)) throw InvalidArgument("logistic: gamma must be positive");
  if (samples.cols() == 0) throw InvalidArgument("logistic: zero-dimensional problem");
  for (Eigen::Index j = 0; j < labels.size(); ++j) {
    if (labels(j) != 1.0 && labels(j) != -1.0) {
      throw InvalidArgument("logistic: label " + std::to_string(j) + " is not in {-1, +1}");
    }
  }
}

double logistic_eval(const LogisticProblem& p, const Vector& x) {
  check_point(p, x, "logistic_eval");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.samples.rows(); ++j) acc += softplus(-p.labels(j) * row_dot(p.samples, j, x));
  return acc + 0.5 * p.gamma * sq_norm(x);
}

Vector logistic_grad(const LogisticProblem& p, const Vector& x) {
  check_point(p, x, "logistic_grad");
  Vector g = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < p.samples.rows(); ++j) {
    const double b = p.labels(j);
    const double z = b * row_dot(p.samples, j, x);
    add_scaled_row(g, -b * sigmoid(-z), p.samples, j);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) g(i) += p.gamma * x(i);
  return g;
}

Vector logistic_hvp(const LogisticProblem& p, const Vector& x, const Vector& u) {
  check_point(p, x, "logistic_hvp");
  check_point(p, u, "logistic_hvp");
  Vector out = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < p.samples.rows(); ++j) {
    const double w = curvature_weight(row_dot(p.samples, j, x));
    add_scaled_row(out, w * row_dot(p.samples, j, u), p.samples, j);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) += p.gamma * u(i);
  return out;
}

Vector logistic_hessian_diag(const LogisticProblem& p, const Vector& x) {
  check_point(p, x, "logistic_hessian_diag");
  Vector d = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < p.samples.rows(); ++j) {
    const double w = curvature_weight(row_dot(p.samples, j, x));
    const double* row = p.samples.data() + j * p.samples.cols();
    for (Eigen::Index i = 0; i < x.size(); ++i) d(i) += w * row[i] * row[i];
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) d(i) += p.gamma;
  return d;
}

double sample_gram_lambda_max(const LogisticProblem& p) {
  const Eigen::Index n = p.samples.cols();
  if (p.samples.rows() == 0) return 0.0;
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = p.samples.transpose() * (p.samples * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-13 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Rayleigh quotients approach from below; round up slightly.
  return lambda * (1.0 + 1e-9);
}

SmoothnessConstants computed_constants(const LogisticProblem& p, std::optional<double> lipschitz,
                                       std::optional<double> self_concordance) {
  p.validate();
  const double lambda_max = sample_gram_lambda_max(p);
  double max_row_norm = 0.0;
  for (Eigen::Index j = 0; j < p.samples.rows(); ++j) max_row_norm = std::max(max_row_norm, p.samples.row(j).norm());
  const double l = lipschitz ? *lipschitz : kSigmoidSecondDerivBound * max_row_norm * lambda_max;
  return SmoothnessConstants::make(p.gamma, p.gamma + 0.25 * lambda_max, l, self_concordance);
}

LogisticObjective::LogisticObjective(LogisticProblem problem, const SmoothnessConstants& constants)
    : problem_(std::move(problem)) {
  problem_.validate();
  constants_ = constants;
}

double LogisticObjective::value(const Vector& x) const { return logistic_eval(problem_, x); }
Vector LogisticObjective::gradient(const Vector& x) const { return logistic_grad(problem_, x); }
Vector LogisticObjective::hvp(const Vector& x, const Vector& u) const { return logistic_hvp(problem_, x, u); }
Vector LogisticObjective::hessian_diag(const Vector& x) const { return logistic_hessian_diag(problem_, x); }

SymMatrix LogisticObjective::explicit_hessian(const Vector& x) const {
  if (dim() > kDiagnosticMaxDim) throw DiagnosticGate("explicit Hessian requested above the diagnostic limit");
  check_dim(x, "explicit_hessian");
  Vector w(problem_.samples.rows());
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = curvature_weight(row_dot(problem_.samples, j, x));
  Matrix h = problem_.samples.transpose() * w.asDiagonal() * problem_.samples;
  h.diagonal().array() += problem_.gamma;
  return SymMatrix(std::move(h));
}

QuadraticObjective::QuadraticObjective(SymMatrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  if (static_cast<std::size_t>(b_.size()) != a_.order()) throw InvalidArgument("quadratic: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a_.dense(), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NotPositiveDefinite("quadratic: A is not positive definite");
  constants_ = SmoothnessConstants::make(lo, hi, 0.0, 0.0);
}

Vector QuadraticObjective::minimizer() const { return SpdFactor(a_).solve(b_); }

double QuadraticObjective::value(const Vector& x) const {
  check_dim(x, "quadratic value");
  return 0.5 * x.dot(a_ * x) - b_.dot(x);
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  check_dim(x, "quadratic gradient");
  return a_ * x - b_;
}

Vector QuadraticObjective::hvp(const Vector& x, const Vector& u) const {
  check_dim(x, "quadratic hvp");
  check_dim(u, "quadratic hvp");
  return a_ * u;
}

Vector QuadraticObjective::hessian_diag(const Vector& x) const {
  check_dim(x, "quadratic hessian_diag");
  return a_.diagonal();
}

SymMatrix QuadraticObjective::explicit_hessian(const Vector& x) const {
  check_dim(x, "quadratic explicit_hessian");
  return a_;
}

QuadraticObjective quadratic_objective(SymMatrix a, Vector b) { return QuadraticObjective(std::move(a), std::move(b)); }

}  // namespace greedyqn
