#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greedyqn/linalg.hpp"

namespace greedyqn {

enum class Termination { gradient_tolerance, max_iterations };

std::string to_string(Termination t);

/// One row per iterate x^k. Step fields (alpha, beta, ...) describe the move
/// from x^k to x^{k+1} and are empty on the final row.
struct IterationRecord {
  std::size_t k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  std::optional<double> alpha;
  std::optional<double> alpha_tau;
  std::optional<double> beta;
  std::optional<double> r_next;  // |x^{k+1} - x^k| in the Hessian norm at x^k

  // Cumulative counters at the moment x^k is reached.
  std::size_t hvp_calls = 0;
  std::size_t comm_rounds = 0;
  std::size_t scalars_pushed = 0;  // per worker

  // Diagnostics (explicit Hessians), only when requested.
  std::optional<double> sigma;      // sigma_{Hess f(x^k)}(G^k)
  std::optional<double> delta;      // blockwise sum, distributed runs
  std::optional<double> lambda;     // Newton-decrement metric
  std::optional<double> potential;  // sigma (or delta) + 4 n M lambda
};

struct SolverResult {
  Vector x;
  std::size_t iterations = 0;
  Termination termination = Termination::max_iterations;
  std::vector<IterationRecord> trace;
  std::vector<Vector> iterates;  // filled only when requested

  std::size_t function_evals = 0;
  std::size_t gradient_evals = 0;
  std::size_t hvp_calls = 0;
  std::size_t setup_hvp_calls = 0;  // e.g. warm start of G0

  bool converged() const { return termination == Termination::gradient_tolerance; }
};

/// iter,f,grad_norm,alpha,beta,hvp_calls,comm_rounds,scalars_pushed,sigma_diag,lambda_diag
void write_trace_csv(std::ostream& out, const SolverResult& result);

/// Shortest round-trip decimal form of a double.
std::string format_real(double v);

}  // namespace greedyqn
