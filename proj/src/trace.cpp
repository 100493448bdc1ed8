#include "greedyqn/trace.hpp"

#include <charconv>
#include <cmath>

namespace greedyqn {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::gradient_tolerance:
      return "gradient-tolerance";
    case Termination::max_iterations:
      return "max-iterations";
  }
  return "unknown";
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_real(*v);
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolverResult& result) {
  out << "iter,f,grad_norm,alpha,beta,hvp_calls,comm_rounds,scalars_pushed,sigma_diag,lambda_diag\n";
  for (const auto& r : result.trace) {
    out << r.k << ',' << format_real(r.f) << ',' << format_real(r.grad_norm) << ',';
    put(out, r.alpha);
    out << ',';
    put(out, r.beta);
    out << ',' << r.hvp_calls << ',' << r.comm_rounds << ',' << r.scalars_pushed << ',';
    put(out, r.delta ? r.delta : r.sigma);
    out << ',';
    put(out, r.lambda);
    out << '\n';
  }
}

}  // namespace greedyqn
