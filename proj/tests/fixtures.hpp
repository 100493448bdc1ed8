#pragma once

#include <cstdint>
#include <random>

#include "greedyqn/data.hpp"
#include "greedyqn/linalg.hpp"
#include "greedyqn/objective.hpp"

namespace fixtures {

using greedyqn::Matrix;
using greedyqn::SymMatrix;
using greedyqn::Vector;

inline Vector normal_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Q diag(lambda) Q^T with eigenvalues spread log-uniformly over [mu, omega]
/// and both endpoints attained.
inline SymMatrix random_spd(std::mt19937_64& rng, std::size_t n, double mu, double omega) {
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix g(dim, dim);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = normal(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector lambda(dim);
  for (Eigen::Index i = 0; i < dim; ++i) lambda(i) = mu * std::pow(omega / mu, unit(rng));
  lambda(0) = mu;
  if (dim > 1) lambda(dim - 1) = omega;
  return SymMatrix(q * lambda.asDiagonal() * q.transpose());
}

/// Small, well-conditioned logistic instance where the adaptive stepsize
/// reaches 1 quickly: feature scale 0.1, gamma 1, computed constants.
inline greedyqn::Dataset benign_data(std::size_t n, std::size_t m, std::uint64_t seed, double scale = 0.1) {
  greedyqn::Dataset d = greedyqn::synthesize(n, m, seed);
  d.features *= scale;
  return d;
}

inline greedyqn::LogisticObjective benign_objective(std::size_t n, std::size_t m, std::uint64_t seed,
                                                    double scale = 0.1, double gamma = 1.0) {
  greedyqn::LogisticProblem p = greedyqn::make_problem(benign_data(n, m, seed, scale), gamma);
  const auto c = greedyqn::computed_constants(p);
  return greedyqn::LogisticObjective(std::move(p), c);
}

}  // namespace fixtures
