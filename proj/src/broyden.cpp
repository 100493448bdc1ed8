#include "greedyqn/broyden.hpp"

#include <cmath>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

constexpr double kSkipTolerance = 1e-12;

struct Quadratics {
  Vector a;  // A u
  Vector d;  // (G - A) u
  double s;  // <Au, u>
  double t;  // <Gu, u>
  double den;  // <(G - A) u, u>
};

Quadratics quadratics(const HessianEstimate& g, std::size_t u, const Vector& au) {
  const std::size_t n = g.order();
  if (static_cast<std::size_t>(au.size()) != n) throw InvalidArgument("broyden: HVP dimension mismatch");
  if (u >= n) throw InvalidArgument("broyden: direction index out of range");
  const auto iu = static_cast<Eigen::Index>(u);
  Quadratics q;
  q.a = au;
  q.d = g.matrix().column(u) - au;
  q.s = au(iu);
  q.t = g.matrix()(u, u);
  q.den = q.d(iu);
  return q;
}

// Perturbations are expressed in the basis [Au, (G - A)u].
Eigen::Matrix2d sr1_coeffs(const Quadratics& q) {
  if (q.den < -kSkipTolerance * q.t) {
    throw OrderingViolated("sr1: <(G - A)u, u> = " + std::to_string(q.den) + " is negative");
  }
  Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
  if (q.den <= kSkipTolerance * q.t) return k;
  k(1, 1) = -1.0 / q.den;
  return k;
}

Eigen::Matrix2d dfp_coeffs(const Quadratics& q) {
  if (!(q.s > 0.0)) throw NotPositiveDefinite("dfp: <Au, u> is not positive");
  Eigen::Matrix2d k;
  k(0, 0) = q.den / (q.s * q.s);
  k(0, 1) = -1.0 / q.s;
  k(1, 0) = -1.0 / q.s;
  k(1, 1) = 0.0;
  return k;
}

Eigen::Matrix2d bfgs_coeffs(const Quadratics& q) {
  if (!(q.s > 0.0) || !(q.t > 0.0)) throw NotPositiveDefinite("bfgs: nonpositive quadratic form");
  Eigen::Matrix2d k;
  k(0, 0) = q.den / (q.s * q.t);
  k(0, 1) = -1.0 / q.t;
  k(1, 0) = -1.0 / q.t;
  k(1, 1) = -1.0 / q.t;
  return k;
}

SymRank2 make_update(const Quadratics& q, const Eigen::Matrix2d& k) {
  SymRank2 up;
  up.basis.resize(q.a.size(), 2);
  up.basis.col(0) = q.a;
  up.basis.col(1) = q.d;
  up.coeffs = k;
  return up;
}

}  // namespace

BroydenVariant BroydenVariant::fixed(double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgument("BroydenVariant: phi must lie in [0, 1]");
  return {Kind::fixed, phi};
}

BroydenVariant BroydenVariant::parse(const std::string& name) {
  if (name == "sr1") return sr1();
  if (name == "dfp") return dfp();
  if (name == "bfgs") return bfgs();
  if (name.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double phi = std::stod(name.substr(6), &used);
      if (used == name.size() - 6) return fixed(phi);
    } catch (const std::logic_error&) {
    }
  }
  throw InvalidArgument("unknown Broyden variant '" + name + "' (expected sr1, dfp, bfgs or fixed:<phi>)");
}

std::string BroydenVariant::name() const {
  switch (kind) {
    case Kind::sr1:
      return "sr1";
    case Kind::dfp:
      return "dfp";
    case Kind::bfgs:
      return "bfgs";
    case Kind::fixed: {
      std::ostringstream out;
      out << "fixed:" << phi;
      return out.str();
    }
  }
  return "unknown";
}

HessianEstimate::HessianEstimate(SymMatrix g, std::size_t refactor_period)
    : g_(std::move(g)), diag_(g_.diagonal()), factor_(g_, refactor_period) {}

HessianEstimate HessianEstimate::scaled_identity(std::size_t n, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("HessianEstimate: identity scale must be positive");
  return HessianEstimate(SymMatrix::identity(n, scale));
}

void HessianEstimate::apply(const SymRank2& update) {
  if (update.is_zero()) return;
  g_.add(update);
  const bool refactored = factor_.rank2_update(update, g_);
  if (refactored) {
    diag_ = g_.diagonal();
  } else {
    const auto& u = update.basis;
    const auto& k = update.coeffs;
    diag_.array() += k(0, 0) * u.col(0).array().square() + 2.0 * k(0, 1) * u.col(0).array() * u.col(1).array() +
                     k(1, 1) * u.col(1).array().square();
  }
  ++generation_;
}

void HessianEstimate::scale(double c) {
  if (!(c > 0.0)) throw InvalidArgument("HessianEstimate: scale must be positive");
  if (c == 1.0) return;
  g_.scale(c);
  diag_ *= c;
  factor_.scale(c);
}

bool HessianEstimate::bitwise_equal(const HessianEstimate& other) const {
  if (generation_ != other.generation_ || diag_.size() != other.diag_.size()) return false;
  return g_.bitwise_equal(other.g_) &&
         std::memcmp(diag_.data(), other.diag_.data(), sizeof(double) * static_cast<std::size_t>(diag_.size())) ==
             0 &&
         factor_.bitwise_equal(other.factor_);
}

HessianOracle::HessianOracle(std::size_t n, DiagonalFn diagonal, ProductFn product)
    : n_(n), diagonal_fn_(std::move(diagonal)), product_fn_(std::move(product)) {}

HessianOracle HessianOracle::from_matrix(SymMatrix a) {
  const std::size_t n = a.order();
  auto shared = std::make_shared<SymMatrix>(std::move(a));
  return HessianOracle(
      n, [shared] { return shared->diagonal(); }, [shared](const Vector& u) { return (*shared) * u; });
}

const Vector& HessianOracle::diagonal() {
  if (!diagonal_) {
    Vector d = diagonal_fn_();
    if (static_cast<std::size_t>(d.size()) != n_) throw InvalidOracle("oracle diagonal has wrong dimension");
    diagonal_ = std::move(d);
  }
  return *diagonal_;
}

Vector HessianOracle::hvp(const Vector& u) {
  if (static_cast<std::size_t>(u.size()) != n_) throw InvalidArgument("oracle: HVP dimension mismatch");
  ++hvp_calls_;
  Vector out = product_fn_(u);
  if (static_cast<std::size_t>(out.size()) != n_) throw InvalidOracle("oracle HVP has wrong dimension");
  return out;
}

Vector HessianOracle::hvp_unit(std::size_t index) {
  if (index >= n_) throw InvalidArgument("oracle: unit index out of range");
  Vector e = Vector::Zero(static_cast<Eigen::Index>(n_));
  e(static_cast<Eigen::Index>(index)) = 1.0;
  return hvp(e);
}

ErrorBudget ErrorBudget::make(double eps, double eps0) {
  if (!(eps >= 0.0) || !(eps <= eps0)) {
    throw InvalidArgument("ErrorBudget: need 0 <= eps <= eps0, got eps=" + std::to_string(eps) +
                          " eps0=" + std::to_string(eps0));
  }
  return {eps, eps0};
}

SymRank2 broyd_perturbation(const BroydenVariant& variant, const HessianEstimate& g, std::size_t u,
                            const Vector& au) {
  const Quadratics q = quadratics(g, u, au);
  Eigen::Matrix2d k;
  switch (variant.kind) {
    case BroydenVariant::Kind::sr1:
      k = sr1_coeffs(q);
      break;
    case BroydenVariant::Kind::dfp:
      k = dfp_coeffs(q);
      break;
    case BroydenVariant::Kind::bfgs:
      k = bfgs_coeffs(q);
      break;
    case BroydenVariant::Kind::fixed:
      if (variant.phi == 0.0) {
        k = sr1_coeffs(q);
      } else if (variant.phi == 1.0) {
        k = dfp_coeffs(q);
      } else {
        k = variant.phi * dfp_coeffs(q) + (1.0 - variant.phi) * sr1_coeffs(q);
      }
      break;
  }
  return make_update(q, k);
}

HessianEstimate broyd(const BroydenVariant& variant, HessianEstimate g, std::size_t u, const Vector& au) {
  g.apply(broyd_perturbation(variant, g, u, au));
  return g;
}

HessianEstimate sr1(HessianEstimate g, std::size_t u, const Vector& au) {
  return broyd(BroydenVariant::sr1(), std::move(g), u, au);
}

HessianEstimate dfp(HessianEstimate g, std::size_t u, const Vector& au) {
  return broyd(BroydenVariant::dfp(), std::move(g), u, au);
}

HessianEstimate bfgs(HessianEstimate g, std::size_t u, const Vector& au) {
  return broyd(BroydenVariant::bfgs(), std::move(g), u, au);
}

std::size_t greedy_vector(const Vector& g_diag, const Vector& a_diag) {
  if (g_diag.size() != a_diag.size() || g_diag.size() == 0) {
    throw InvalidArgument("greedy_vector: dimension mismatch");
  }
  std::size_t best = 0;
  double best_ratio = 0.0;
  for (Eigen::Index i = 0; i < a_diag.size(); ++i) {
    if (!(a_diag(i) > 0.0)) {
      throw InvalidOracle("greedy_vector: Hessian diagonal entry " + std::to_string(i) + " is not positive");
    }
    const double ratio = g_diag(i) / a_diag(i);
    if (i == 0 || ratio > best_ratio) {
      best = static_cast<std::size_t>(i);
      best_ratio = ratio;
    }
  }
  return best;
}

GreedyRecord gbroyd_step(HessianEstimate& g, HessianOracle& oracle, const BroydenVariant& variant) {
  if (oracle.order() != g.order()) throw InvalidArgument("gbroyd: oracle dimension mismatch");
  GreedyRecord rec;
  rec.index = greedy_vector(g.diag(), oracle.diagonal());
  rec.hvp = oracle.hvp_unit(rec.index);
  g.apply(broyd_perturbation(variant, g, rec.index, rec.hvp));
  return rec;
}

HessianEstimate gbroyd(HessianEstimate g, HessianOracle& oracle, const BroydenVariant& variant) {
  gbroyd_step(g, oracle, variant);
  return g;
}

RefineResult gbroyd_tau(HessianEstimate g, HessianOracle& oracle, std::size_t tau, const BroydenVariant& variant) {
  RefineResult out;
  out.records.reserve(tau);
  for (std::size_t t = 0; t < tau; ++t) out.records.push_back(gbroyd_step(g, oracle, variant));
  out.estimate = std::move(g);
  return out;
}

void apply_correction_scaling(HessianEstimate& g, double r_plus, double m) {
  if (!(r_plus >= 0.0) || !(m >= 0.0)) throw InvalidArgument("correction: r_plus and M must be nonnegative");
  g.scale(1.0 + m * r_plus);
}

CorrectionResult corrected_update_recorded(HessianEstimate g, double r_plus, double m, HessianOracle& oracle_plus,
                                           const BroydenVariant& variant) {
  apply_correction_scaling(g, r_plus, m);
  CorrectionResult out;
  out.record = gbroyd_step(g, oracle_plus, variant);
  out.estimate = std::move(g);
  return out;
}

HessianEstimate corrected_update(HessianEstimate g, double r_plus, double m, HessianOracle& oracle_plus,
                                 const BroydenVariant& variant) {
  return corrected_update_recorded(std::move(g), r_plus, m, oracle_plus, variant).estimate;
}

double sigma_metric(const SymMatrix& g, const SpdFactor& a_factor) {
  if (g.order() != a_factor.order()) throw InvalidArgument("sigma_metric: dimension mismatch");
  return a_factor.solve(g.dense()).trace() - static_cast<double>(g.order());
}

double sigma_metric(const HessianEstimate& g, const SpdFactor& a_factor) {
  return sigma_metric(g.matrix(), a_factor);
}

double delta_metric(std::span<const HessianEstimate> estimates, std::span<const SpdFactor> hessian_factors) {
  if (estimates.size() != hessian_factors.size()) throw InvalidArgument("delta_metric: block count mismatch");
  if (estimates.empty()) throw InvalidArgument("delta_metric: no blocks");
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].order() != estimates[0].order()) throw InvalidArgument("delta_metric: unequal orders");
    total += sigma_metric(estimates[i], hessian_factors[i]);
  }
  return total;
}

}  // namespace greedyqn
