#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "greedyqn/errors.hpp"
#include "greedyqn/linalg.hpp"

using namespace greedyqn;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

SymRank2 random_rank2(std::mt19937_64& rng, std::size_t n, double c0, double c1) {
  SymRank2 u;
  u.basis.resize(static_cast<Eigen::Index>(n), 2);
  u.basis.col(0) = fixtures::normal_vector(rng, n);
  u.basis.col(1) = fixtures::normal_vector(rng, n);
  u.coeffs << c0, 0.0, 0.0, c1;
  return u;
}

}  // namespace

TEST_CASE("symmetric matrix is exactly symmetric after construction and updates") {
  std::mt19937_64 rng(1);
  Matrix raw = Matrix::Random(6, 6);
  SymMatrix a(raw);
  CHECK((a.dense() - a.dense().transpose()).cwiseAbs().maxCoeff() == 0.0);
  SymRank2 u = random_rank2(rng, 6, 0.3, -0.1);
  u.coeffs(0, 1) = 0.2;
  u.coeffs(1, 0) = 0.2;
  a.add(u);
  CHECK((a.dense() - a.dense().transpose()).cwiseAbs().maxCoeff() == 0.0);
  a.scale(1.7);
  CHECK((a.dense() - a.dense().transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-square input is rejected") { CHECK_THROWS_AS(SymMatrix(Matrix::Zero(2, 3)), InvalidArgument); }

TEST_CASE("weighted_norm examples") {
  CHECK(weighted_norm(Vector::Zero(2), Vector::Zero(2)) == 0.0);
  Vector h(2);
  h << 3.0, 4.0;
  CHECK(weighted_norm(h, h) == doctest::Approx(5.0).epsilon(1e-15));

  std::mt19937_64 rng(2);
  const SymMatrix a = fixtures::random_spd(rng, 10, 0.5, 20.0);
  const Vector x = fixtures::normal_vector(rng, 10);
  const double oracle = std::sqrt(x.dot(a.dense() * x));
  CHECK(rel_err(weighted_norm(x, a * x), oracle) <= 1e-12);
}

TEST_CASE("weighted_norm rejects a clearly indefinite product") {
  Vector h(2);
  h << 1.0, 0.0;
  Vector ah(2);
  ah << -1.0, 0.0;
  CHECK_THROWS_AS(weighted_norm(h, ah), NotPositiveSemidefinite);
}

TEST_CASE("dual_norm examples") {
  const SpdFactor four(SymMatrix::identity(2, 4.0));
  CHECK(dual_norm(Vector::Zero(2), four) == 0.0);
  Vector h(2);
  h << 2.0, 0.0;
  CHECK(dual_norm(h, four) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix a = fixtures::random_spd(rng, 12, 0.1, 100.0);
    const Vector x = fixtures::normal_vector(rng, 12);
    const double oracle = std::sqrt(x.dot(a.dense().inverse() * x));
    CHECK(rel_err(dual_norm(x, SpdFactor(a)), oracle) <= 1e-10);
  }
}

TEST_CASE("dual and primal norms recover <Ah, h>") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix a = fixtures::random_spd(rng, 9, 0.01, 50.0);
    const Vector h = fixtures::normal_vector(rng, 9);
    const Vector ah = a * h;
    const double d = dual_norm(ah, SpdFactor(a));
    CHECK(rel_err(d * d, ah.dot(h)) <= 1e-10);
  }
}

TEST_CASE("trace_inner examples") {
  CHECK(trace_inner(SymMatrix::identity(3), SymMatrix::identity(3)) == 3.0);
  std::mt19937_64 rng(5);
  const SymMatrix b = fixtures::random_spd(rng, 5, 1.0, 3.0);
  CHECK(rel_err(trace_inner(SymMatrix::identity(5), b), b.dense().trace()) <= 1e-14);
  const SymMatrix a = SymMatrix(Matrix::Random(8, 8));
  const SymMatrix c = SymMatrix(Matrix::Random(8, 8));
  CHECK(rel_err(trace_inner(a, c), (a.dense() * c.dense()).trace()) <= 1e-12);
}

TEST_CASE("factor solves recover h for well-conditioned matrices") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix a = fixtures::random_spd(rng, 15, 1.0, 1e6);
    const Vector h = fixtures::normal_vector(rng, 15);
    CHECK(rel_err(SpdFactor(a).solve(a * h), h) <= 1e-8);
  }
}

TEST_CASE("factor refuses matrices that are not positive definite") {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = -1.0;
  CHECK_THROWS_AS(SpdFactor(SymMatrix(m)), NotPositiveDefinite);
  m(2, 2) = 1e-13;
  CHECK_THROWS_AS(SpdFactor(SymMatrix(m)), NotPositiveDefinite);
  m(2, 2) = 1e-11;
  CHECK_NOTHROW(SpdFactor(SymMatrix(m)));
}

TEST_CASE("zero rank-2 update leaves solves bit-identical") {
  std::mt19937_64 rng(7);
  const SymMatrix a = fixtures::random_spd(rng, 6, 1.0, 10.0);
  const SpdFactor f(a);
  SymRank2 zero;
  zero.basis = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(6, 2);
  const SpdFactor g = update_factor_rank2(f, zero, a);
  const Vector b = fixtures::normal_vector(rng, 6);
  const Vector x1 = f.solve(b);
  const Vector x2 = g.solve(b);
  CHECK(std::memcmp(x1.data(), x2.data(), sizeof(double) * 6) == 0);
}

TEST_CASE("identity plus e1 e1^T solves e1 to 0.5") {
  SymMatrix a = SymMatrix::identity(3);
  SymRank2 u;
  u.basis = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(3, 2);
  u.basis(0, 0) = 1.0;
  u.coeffs(0, 0) = 1.0;
  SymMatrix perturbed = a;
  perturbed.add(u);
  const SpdFactor f = update_factor_rank2(SpdFactor(a), u, perturbed);
  const Vector x = f.solve(Vector(Vector::Unit(3, 0)));
  CHECK(x(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(x(1)) <= 1e-16);
}

TEST_CASE("chained rank-2 updates agree with refactorization") {
  std::mt19937_64 rng(8);
  const std::size_t n = 20;
  SymMatrix a = fixtures::random_spd(rng, n, 1.0, 10.0);
  SpdFactor f(a);
  std::uniform_real_distribution<double> coef(-0.02, 0.05);
  double worst = 0.0;
  for (int step = 0; step < 200; ++step) {
    SymRank2 u = random_rank2(rng, n, coef(rng), coef(rng));
    u.coeffs(0, 1) = u.coeffs(1, 0) = 0.5 * coef(rng);
    SymMatrix next = a;
    next.add(u);
    if (Eigen::SelfAdjointEigenSolver<Matrix>(next.dense()).eigenvalues().minCoeff() < 0.5) continue;
    f.rank2_update(u, next);
    a = next;
    const Vector b = fixtures::normal_vector(rng, n);
    worst = std::max(worst, rel_err(f.solve(b), SpdFactor(a).solve(b)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("refactorization is forced every period updates") {
  std::mt19937_64 rng(9);
  SymMatrix a = SymMatrix::identity(4, 2.0);
  SpdFactor f(a, 3);
  int refactors = 0;
  for (int i = 0; i < 9; ++i) {
    SymRank2 u = random_rank2(rng, 4, 0.01, 0.01);
    a.add(u);
    refactors += f.rank2_update(u, a) ? 1 : 0;
  }
  CHECK(refactors == 3);
  CHECK(f.updates_since_refactor() == 0);
}

TEST_CASE("downdate that destroys definiteness throws and leaves the factor usable") {
  SymMatrix a = SymMatrix::identity(2);
  SpdFactor f(a);
  SymRank2 u;
  u.basis = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(2, 2);
  u.basis(0, 0) = 1.0;
  u.coeffs(0, 0) = -1.0;
  SymMatrix bad = a;
  bad.add(u);
  CHECK_THROWS_AS(f.rank2_update(u, bad), DegenerateUpdate);
  const Vector x = f.solve(Vector(Vector::Ones(2)));
  CHECK(x(0) == doctest::Approx(1.0));
}
