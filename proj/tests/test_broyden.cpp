#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "greedyqn/broyden.hpp"
#include "greedyqn/errors.hpp"

using namespace greedyqn;

namespace {

HessianEstimate estimate_of(const SymMatrix& g) { return HessianEstimate(g); }

SymMatrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return SymMatrix(m);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff(); }

// Dense forms of the three updates along u, for oracles.
Matrix dense_sr1(const Matrix& g, const Matrix& a, const Vector& u) {
  const Vector d = (g - a) * u;
  return g - d * d.transpose() / d.dot(u);
}

Matrix dense_dfp(const Matrix& g, const Matrix& a, const Vector& u) {
  const Vector au = a * u;
  const double s = au.dot(u);
  const Vector gu = g * u;
  return g - (au * gu.transpose() + gu * au.transpose()) / s + (1.0 + gu.dot(u) / s) * au * au.transpose() / s;
}

Matrix dense_bfgs(const Matrix& g, const Matrix& a, const Vector& u) {
  const Vector au = a * u;
  const Vector gu = g * u;
  return g - gu * gu.transpose() / gu.dot(u) + au * au.transpose() / au.dot(u);
}

struct Instance {
  SymMatrix a;
  SymMatrix g;
};

// G = A + P P^T so that G >= A.
Instance random_pair(std::mt19937_64& rng, std::size_t n) {
  Instance in;
  in.a = fixtures::random_spd(rng, n, 0.5, 10.0);
  Matrix p(static_cast<Eigen::Index>(n), 2);
  p.col(0) = fixtures::normal_vector(rng, n);
  p.col(1) = fixtures::normal_vector(rng, n);
  in.g = SymMatrix(in.a.dense() + p * p.transpose());
  return in;
}

double explicit_sigma(const SymMatrix& g, const SymMatrix& a) {
  return (a.dense().inverse() * g.dense()).trace() - static_cast<double>(g.order());
}

}  // namespace

TEST_CASE("variant parsing and names") {
  CHECK(BroydenVariant::parse("sr1").kind == BroydenVariant::Kind::sr1);
  CHECK(BroydenVariant::parse("dfp").kind == BroydenVariant::Kind::dfp);
  CHECK(BroydenVariant::parse("bfgs").kind == BroydenVariant::Kind::bfgs);
  CHECK(BroydenVariant::parse("fixed:0.25").phi == 0.25);
  CHECK_THROWS_AS(BroydenVariant::parse("fixed:1.5"), InvalidArgument);
  CHECK_THROWS_AS(BroydenVariant::parse("newton"), InvalidArgument);
  CHECK(BroydenVariant::parse(BroydenVariant::fixed(0.5).name()).phi == 0.5);
}

TEST_CASE("sr1 examples") {
  const HessianEstimate one = sr1(estimate_of(SymMatrix::identity(1, 2.0)), 0, Vector::Ones(1));
  CHECK(one.matrix()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  const HessianEstimate two = sr1(estimate_of(diag2(2, 2)), 0, Vector::Unit(2, 0));
  CHECK(max_abs(two.matrix().dense() - diag2(1, 2).dense()) <= 1e-15);

  const HessianEstimate same = sr1(estimate_of(diag2(3, 5)), 1, Vector::Unit(2, 1) * 5.0);
  CHECK(same.matrix().bitwise_equal(diag2(3, 5)));
}

TEST_CASE("sr1 refuses G below A along u") {
  CHECK_THROWS_AS(sr1(estimate_of(SymMatrix::identity(1, 1.0)), 0, Vector::Ones(1) * 2.0), OrderingViolated);
}

TEST_CASE("dfp examples") {
  const HessianEstimate one = dfp(estimate_of(SymMatrix::identity(1, 4.0)), 0, Vector::Ones(1));
  CHECK(one.matrix()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_pair(rng, 6);
    const std::size_t u = static_cast<std::size_t>(trial) % 6;
    const Vector e = Vector::Unit(6, static_cast<Eigen::Index>(u));
    const Matrix oracle = dense_dfp(in.g.dense(), in.a.dense(), e);
    const Matrix got = dfp(estimate_of(in.g), u, in.a * e).matrix().dense();
    CHECK(max_abs(got - oracle) <= 1e-12 * max_abs(oracle));
  }
}

TEST_CASE("bfgs examples") {
  const HessianEstimate one = bfgs(estimate_of(SymMatrix::identity(1, 4.0)), 0, Vector::Ones(1));
  CHECK(one.matrix()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_pair(rng, 6);
    const std::size_t u = static_cast<std::size_t>(trial + 1) % 6;
    const Vector e = Vector::Unit(6, static_cast<Eigen::Index>(u));
    const Vector au = in.a * e;
    const double phi = au(static_cast<Eigen::Index>(u)) / in.g(u, u);
    const Matrix combo = broyd(BroydenVariant::fixed(phi), estimate_of(in.g), u, au).matrix().dense();
    const Matrix got = bfgs(estimate_of(in.g), u, au).matrix().dense();
    CHECK(max_abs(got - combo) <= 1e-12 * max_abs(got));
    CHECK(max_abs(got - dense_bfgs(in.g.dense(), in.a.dense(), e)) <= 1e-12 * max_abs(got));
  }
}

TEST_CASE("Broyden combination endpoints and midpoint") {
  std::mt19937_64 rng(13);
  const Instance in = random_pair(rng, 5);
  const Vector e = Vector::Unit(5, 2);
  const Vector au = in.a * e;
  const Matrix s = sr1(estimate_of(in.g), 2, au).matrix().dense();
  const Matrix d = dfp(estimate_of(in.g), 2, au).matrix().dense();
  CHECK(max_abs(broyd(BroydenVariant::fixed(0.0), estimate_of(in.g), 2, au).matrix().dense() - s) <= 1e-15);
  CHECK(max_abs(broyd(BroydenVariant::fixed(1.0), estimate_of(in.g), 2, au).matrix().dense() - d) <= 1e-15);
  const Matrix half = broyd(BroydenVariant::fixed(0.5), estimate_of(in.g), 2, au).matrix().dense();
  CHECK(max_abs(half - 0.5 * (s + d)) <= 1e-12 * max_abs(half));
  CHECK(max_abs(s - dense_sr1(in.g.dense(), in.a.dense(), e)) <= 1e-12 * max_abs(s));
}

TEST_CASE("every variant has A as a fixed point") {
  std::mt19937_64 rng(14);
  const SymMatrix a = fixtures::random_spd(rng, 7, 1.0, 5.0);
  for (const auto& v : {BroydenVariant::sr1(), BroydenVariant::dfp(), BroydenVariant::bfgs(),
                        BroydenVariant::fixed(0.3)}) {
    for (std::size_t u = 0; u < 7; ++u) {
      const Vector au = a * Vector::Unit(7, static_cast<Eigen::Index>(u));
      CHECK(max_abs(broyd(v, estimate_of(a), u, au).matrix().dense() - a.dense()) <= 1e-12);
    }
  }
}

TEST_CASE("ordering G >= A is preserved by every variant") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> dim(2, 30);
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    const std::size_t n = static_cast<std::size_t>(dim(rng));
    const Instance in = random_pair(rng, n);
    const std::size_t u = static_cast<std::size_t>(seed) % n;
    const Vector au = in.a * Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(u));
    const double scale = in.a.dense().norm();
    for (const auto& v : {BroydenVariant::sr1(), BroydenVariant::dfp(), BroydenVariant::bfgs(),
                          BroydenVariant::fixed(0.7)}) {
      const Matrix diff = broyd(v, estimate_of(in.g), u, au).matrix().dense() - in.a.dense();
      worst = std::min(worst, min_eig(diff) / scale);
    }
  }
  CHECK(worst >= -1e-8);
}

TEST_CASE("greedy_vector examples (0-based)") {
  Vector g(2), a(2);
  g << 2, 5;
  a << 1, 1;
  CHECK(greedy_vector(g, a) == 1);
  g << 2, 2;
  CHECK(greedy_vector(g, a) == 0);
  g << 3, 8;
  a << 3, 2;
  CHECK(greedy_vector(g, a) == 1);
}

TEST_CASE("gbroyd examples") {
  auto oracle = HessianOracle::from_matrix(SymMatrix::identity(1, 3.0));
  for (const auto& v : {BroydenVariant::sr1(), BroydenVariant::dfp(), BroydenVariant::bfgs()}) {
    const HessianEstimate g = gbroyd(HessianEstimate::scaled_identity(1, 6.0), oracle, v);
    CHECK(g.matrix()(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
  }

  std::mt19937_64 rng(16);
  const SymMatrix a = fixtures::random_spd(rng, 5, 1.0, 4.0);
  auto oa = HessianOracle::from_matrix(a);
  const HessianEstimate same = gbroyd(estimate_of(a), oa, BroydenVariant::bfgs());
  CHECK(max_abs(same.matrix().dense() - a.dense()) <= 1e-12);
}

TEST_CASE("gbroyd contracts sigma by 1 - mu/(n omega) per step") {
  std::mt19937_64 rng(17);
  const std::size_t n = 20;
  const double mu = 1.0;
  const double omega = 50.0;
  const SymMatrix a = fixtures::random_spd(rng, n, mu, omega);
  const SpdFactor af(a);
  auto oracle = HessianOracle::from_matrix(a);
  HessianEstimate g = HessianEstimate::scaled_identity(n, omega);
  const double rate = 1.0 - mu / (static_cast<double>(n) * omega);
  double sigma = sigma_metric(g, af);
  bool ok = true;
  for (int k = 0; k < 200; ++k) {
    gbroyd_step(g, oracle, BroydenVariant::bfgs());
    const double next = sigma_metric(g, af);
    ok = ok && next <= rate * sigma + 1e-10;
    sigma = next;
  }
  CHECK(ok);
  CHECK(oracle.hvp_calls() == 200);
}

TEST_CASE("gbroyd_tau examples") {
  std::mt19937_64 rng(18);
  const std::size_t n = 8;
  const SymMatrix a = fixtures::random_spd(rng, n, 1.0, 10.0);
  const SpdFactor af(a);
  auto oracle = HessianOracle::from_matrix(a);
  const HessianEstimate g0 = HessianEstimate::scaled_identity(n, 10.0);

  const RefineResult zero = gbroyd_tau(g0, oracle, 0, BroydenVariant::bfgs());
  CHECK(zero.records.empty());
  CHECK(zero.estimate.bitwise_equal(g0));

  const RefineResult one = gbroyd_tau(g0, oracle, 1, BroydenVariant::bfgs());
  const HessianEstimate single = gbroyd(g0, oracle, BroydenVariant::bfgs());
  CHECK(one.estimate.bitwise_equal(single));

  const RefineResult five = gbroyd_tau(g0, oracle, 5, BroydenVariant::bfgs());
  CHECK(five.records.size() == 5);
  const double rate = std::pow(1.0 - 1.0 / (static_cast<double>(n) * 10.0), 5);
  CHECK(sigma_metric(five.estimate, af) <= rate * sigma_metric(g0, af) + 1e-10);
}

TEST_CASE("corrected_update examples") {
  std::mt19937_64 rng(19);
  const SymMatrix a = fixtures::random_spd(rng, 6, 1.0, 4.0);
  auto oracle = HessianOracle::from_matrix(a);
  const HessianEstimate g = HessianEstimate::scaled_identity(6, 5.0);
  const HessianEstimate plain = gbroyd(g, oracle, BroydenVariant::bfgs());
  CHECK(corrected_update(g, 0.0, 3.0, oracle, BroydenVariant::bfgs()).bitwise_equal(plain));
  CHECK(corrected_update(g, 2.0, 0.0, oracle, BroydenVariant::bfgs()).bitwise_equal(plain));

  HessianEstimate scaled = HessianEstimate::scaled_identity(3, 1.0);
  apply_correction_scaling(scaled, 0.5, 1.0);
  CHECK(max_abs(scaled.matrix().dense() - 1.5 * Matrix::Identity(3, 3)) == 0.0);
  CHECK(scaled.diag().isApprox(Vector::Constant(3, 1.5)));
}

TEST_CASE("sigma_metric examples") {
  std::mt19937_64 rng(20);
  const SymMatrix a = fixtures::random_spd(rng, 6, 1.0, 9.0);
  CHECK(std::abs(sigma_metric(estimate_of(a), SpdFactor(a))) <= 1e-12);
  CHECK(sigma_metric(HessianEstimate::scaled_identity(3, 2.0), SpdFactor(SymMatrix::identity(3))) ==
        doctest::Approx(3.0).epsilon(1e-15));
  const Instance in = random_pair(rng, 7);
  const double oracle = explicit_sigma(in.g, in.a);
  CHECK(std::abs(sigma_metric(estimate_of(in.g), SpdFactor(in.a)) - oracle) <= 1e-10 * std::abs(oracle));
  CHECK(sigma_metric(estimate_of(in.g), SpdFactor(in.a)) >= -1e-10);
}

TEST_CASE("delta_metric examples and the aggregate ordering") {
  std::mt19937_64 rng(21);
  std::vector<HessianEstimate> gs;
  std::vector<SpdFactor> as;
  Matrix g_sum = Matrix::Zero(6, 6);
  Matrix a_sum = Matrix::Zero(6, 6);
  for (int i = 0; i < 4; ++i) {
    const Instance in = random_pair(rng, 6);
    gs.emplace_back(in.g);
    as.emplace_back(in.a);
    g_sum += in.g.dense();
    a_sum += in.a.dense();
  }
  const double delta = delta_metric(gs, as);
  const double sigma = sigma_metric(SymMatrix(g_sum), SpdFactor(SymMatrix(a_sum)));
  CHECK(sigma <= delta + 1e-10);

  std::vector<HessianEstimate> one{gs[0]};
  std::vector<SpdFactor> one_a{as[0]};
  CHECK(delta_metric(one, one_a) == sigma_metric(gs[0], as[0]));

  std::vector<HessianEstimate> exact;
  std::vector<SpdFactor> exact_a;
  for (int i = 0; i < 3; ++i) {
    const SymMatrix a = fixtures::random_spd(rng, 4, 1.0, 3.0);
    exact.emplace_back(a);
    exact_a.emplace_back(a);
  }
  CHECK(std::abs(delta_metric(exact, exact_a)) <= 1e-12);
}

TEST_CASE("aggregate contraction when every block takes one gbroyd step") {
  std::mt19937_64 rng(22);
  const std::size_t n = 10;
  const double mu = 1.0;
  const double omega = 20.0;
  std::vector<HessianEstimate> gs;
  std::vector<SpdFactor> as;
  std::vector<HessianOracle> oracles;
  for (int i = 0; i < 3; ++i) {
    const SymMatrix a = fixtures::random_spd(rng, n, mu, omega);
    gs.push_back(HessianEstimate::scaled_identity(n, omega));
    as.emplace_back(a);
    oracles.push_back(HessianOracle::from_matrix(a));
  }
  const double rate = 1.0 - mu / (static_cast<double>(n) * omega);
  bool ok = true;
  for (int k = 0; k < 50; ++k) {
    const double before = delta_metric(gs, as);
    for (std::size_t i = 0; i < gs.size(); ++i) gbroyd_step(gs[i], oracles[i], BroydenVariant::bfgs());
    ok = ok && delta_metric(gs, as) <= rate * before + 1e-10;
  }
  CHECK(ok);
}

TEST_CASE("maintained diagonal tracks the matrix") {
  std::mt19937_64 rng(23);
  const SymMatrix a = fixtures::random_spd(rng, 12, 1.0, 30.0);
  auto oracle = HessianOracle::from_matrix(a);
  HessianEstimate g = HessianEstimate::scaled_identity(12, 30.0);
  for (int k = 0; k < 120; ++k) {
    gbroyd_step(g, oracle, BroydenVariant::bfgs());
    if (k % 7 == 0) apply_correction_scaling(g, 0.01, 0.5);
    CHECK((g.diag() - g.matrix().diagonal()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(min_eig(g.matrix().dense() - a.dense()) >= -1e-8 * a.dense().norm());
  }
}

TEST_CASE("one gbroyd step is exact for n = 1 with every variant") {
  for (const auto& v : {BroydenVariant::sr1(), BroydenVariant::dfp(), BroydenVariant::bfgs(),
                        BroydenVariant::fixed(0.4)}) {
    auto oracle = HessianOracle::from_matrix(SymMatrix::identity(1, 0.7));
    const HessianEstimate g = gbroyd(HessianEstimate::scaled_identity(1, 9.0), oracle, v);
    CHECK(g.matrix()(0, 0) == doctest::Approx(0.7).epsilon(1e-14));
  }
}
