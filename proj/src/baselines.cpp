#include "greedyqn/baselines.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

IterationRecord make_record(std::size_t k, double f, const Vector& g) {
  IterationRecord rec;
  rec.k = k;
  rec.f = f;
  rec.grad_norm = g.norm();
  return rec;
}

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN when the
// interpolant has no real minimizer.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::nan("");
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

}  // namespace

double armijo_slack(double f) { return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f)); }

SolverResult nagd_run(const Objective& objective, const Vector& x0, const NagdConfig& config) {
  if (!(config.tol > 0.0)) throw InvalidArgument("tol must be positive");
  const auto& c = objective.constants();
  const double step = config.step.value_or(1.0 / c.omega);
  const double sk = std::sqrt(c.kappa());
  const double momentum = config.momentum.value_or((sk - 1.0) / (sk + 1.0));
  if (!(step > 0.0)) throw InvalidArgument("NAGD step must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("NAGD momentum must lie in [0, 1)");

  SolverResult result;
  Vector x = x0;
  Vector y = x0;
  double f0 = 0.0;
  for (std::size_t k = 0;; ++k) {
    const Vector gx = objective.gradient(x);
    const double fx = objective.value(x);
    ++result.gradient_evals;
    ++result.function_evals;
    if (k == 0) f0 = fx;
    if (!std::isfinite(fx) || fx > f0 + config.divergence_factor * std::max(1.0, std::abs(f0))) {
      std::ostringstream os;
      os << "NAGD diverged at k=" << k << ": f=" << format_real(fx) << " (f0=" << format_real(f0)
         << "), |grad|=" << format_real(gx.norm()) << ", step=" << format_real(step)
         << ", momentum=" << format_real(momentum);
      throw Divergence(os.str());
    }
    IterationRecord rec = make_record(k, fx, gx);
    if (config.record_iterates) result.iterates.push_back(x);
    if (rec.grad_norm <= config.tol || k == config.max_iters) {
      result.trace.push_back(rec);
      result.termination =
          rec.grad_norm <= config.tol ? Termination::gradient_tolerance : Termination::max_iterations;
      result.iterations = k;
      break;
    }
    rec.alpha = step;
    result.trace.push_back(rec);

    const Vector gy = k == 0 ? gx : objective.gradient(y);
    if (k != 0) ++result.gradient_evals;
    const Vector x_next = y - step * gy;
    y = x_next + momentum * (x_next - x);
    x = x_next;
  }
  result.x = x;
  return result;
}

void WolfeConfig::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw InvalidArgument("Wolfe parameters need 0 < c1 < c2 < 1");
  if (max_trials == 0) throw InvalidArgument("line search needs at least one trial");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
}

LineSearchResult wolfe_line_search(const Objective& objective, const Vector& x, double f, const Vector& grad,
                                   const Vector& d, const WolfeConfig& config) {
  const double dphi0 = grad.dot(d);
  if (!(dphi0 < 0.0)) throw LineSearchFailure("direction is not a descent direction (g.d = " + format_real(dphi0) + ")");

  LineSearchResult out;
  struct Trial {
    double a, phi, dphi;
    Vector g;
  };
  auto evaluate = [&](double a) {
    if (out.trials == config.max_trials) {
      std::ostringstream os;
      os << "no Wolfe step after " << config.max_trials << " trials: f=" << format_real(f)
         << ", g.d=" << format_real(dphi0) << ", |d|=" << format_real(d.norm()) << ", last alpha=" << format_real(a);
      throw LineSearchFailure(os.str());
    }
    ++out.trials;
    const Vector xa = x + a * d;
    Trial t{a, objective.value(xa), 0.0, objective.gradient(xa)};
    t.dphi = t.g.dot(d);
    return t;
  };
  // Sufficient decrease is judged to the precision of f: once the required
  // decrease is below round-off, a step that does not raise f is accepted.
  const double slack = armijo_slack(f);
  auto armijo = [&](const Trial& t) {
    const double required = config.c1 * t.a * dphi0;
    return t.phi <= f + required || (-required <= slack && t.phi <= f + slack);
  };
  // f comparisons between trials also lose meaning in that regime; the
  // bracket then follows the directional derivative alone.
  auto not_lower = [&](const Trial& t, const Trial& ref) {
    const bool flat = -config.c1 * t.a * dphi0 <= slack;
    return flat ? t.phi > ref.phi + slack : t.phi >= ref.phi;
  };
  auto curvature = [&](const Trial& t) { return std::abs(t.dphi) <= -config.c2 * dphi0; };
  auto accept = [&](Trial& t) {
    out.alpha = t.a;
    out.f = t.phi;
    out.gradient = std::move(t.g);
    return out;
  };

  auto zoom = [&](Trial lo, Trial hi) {
    for (;;) {
      const double width = hi.a - lo.a;
      double a = cubic_minimizer(lo.a, lo.phi, lo.dphi, hi.a, hi.phi, hi.dphi);
      const double left = std::min(lo.a, hi.a) + 0.1 * std::abs(width);
      const double right = std::max(lo.a, hi.a) - 0.1 * std::abs(width);
      if (!std::isfinite(a) || a < left || a > right) a = 0.5 * (lo.a + hi.a);
      Trial t = evaluate(a);
      if (!armijo(t) || not_lower(t, lo)) {
        hi = std::move(t);
      } else {
        if (curvature(t)) return accept(t);
        if (t.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(t);
      }
    }
  };

  Trial prev{0.0, f, dphi0, grad};
  double a = 1.0;
  for (std::size_t i = 0;; ++i) {
    Trial t = evaluate(a);
    if (!armijo(t) || (i > 0 && not_lower(t, prev))) return zoom(std::move(prev), std::move(t));
    if (curvature(t)) return accept(t);
    if (t.dphi >= 0.0) return zoom(std::move(t), std::move(prev));
    prev = std::move(t);
    a *= 2.0;
  }
}

Matrix bfgs_inverse_update(const Matrix& h, const Vector& s, const Vector& y) {
  const double ys = y.dot(s);
  if (!(ys > 0.0)) throw DegenerateUpdate("BFGS curvature y.s = " + format_real(ys) + " is not positive", 0);
  const double rho = 1.0 / ys;
  const Vector hy = h * y;
  Matrix out = h;
  out.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
  out.noalias() += (rho * rho * y.dot(hy) + rho) * (s * s.transpose());
  return 0.5 * (out + out.transpose());
}

SolverResult bfgs_wolfe_run(const Objective& objective, const Vector& x0, const WolfeConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(objective.dim());
  if (x0.size() != n) throw InvalidArgument("x0 has the wrong dimension");
  Matrix h = config.h0 ? *config.h0 : Matrix::Identity(n, n);
  if (h.rows() != n || h.cols() != n) throw InvalidArgument("H0 has the wrong shape");
  const bool rescale_first = !config.h0;

  SolverResult result;
  Vector x = x0;
  double f = objective.value(x);
  Vector g = objective.gradient(x);
  ++result.function_evals;
  ++result.gradient_evals;
  for (std::size_t k = 0;; ++k) {
    IterationRecord rec = make_record(k, f, g);
    if (config.record_iterates) result.iterates.push_back(x);
    if (rec.grad_norm <= config.tol || k == config.max_iters) {
      result.trace.push_back(rec);
      result.termination =
          rec.grad_norm <= config.tol ? Termination::gradient_tolerance : Termination::max_iterations;
      result.iterations = k;
      break;
    }
    const Vector d = -(h * g);
    LineSearchResult ls = wolfe_line_search(objective, x, f, g, d, config);
    result.function_evals += ls.trials;
    result.gradient_evals += ls.trials;

    const Vector x_next = x + ls.alpha * d;
    const Vector s = x_next - x;
    const Vector y = ls.gradient - g;
    if (k == 0 && rescale_first) h = (y.dot(s) / y.dot(y)) * Matrix::Identity(n, n);
    h = bfgs_inverse_update(h, s, y);

    rec.alpha = ls.alpha;
    result.trace.push_back(rec);
    x = x_next;
    f = ls.f;
    g = std::move(ls.gradient);
  }
  result.x = x;
  return result;
}

}  // namespace greedyqn
