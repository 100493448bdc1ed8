#include "greedyqn/dagqn.hpp"

#include <bit>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "greedyqn/errors.hpp"

namespace greedyqn {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t& offset, std::size_t record) {
  if (offset + 4 > bytes.size()) throw ProtocolError("truncated id", record);
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[offset + b]) << (8 * b);
  offset += 4;
  return v;
}

double get_f64(std::span<const std::uint8_t> bytes, std::size_t& offset, std::size_t record) {
  if (offset + 8 > bytes.size()) throw ProtocolError("truncated real", record);
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[offset + b]) << (8 * b);
  offset += 8;
  return std::bit_cast<double>(bits);
}

void encode_record(const GreedyRecord& rec, std::vector<std::uint8_t>& out, WireCount& count) {
  if (rec.index >= std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("record id overflows u32");
  put_u32(out, static_cast<std::uint32_t>(rec.index + 1));
  ++count.ids;
  for (Eigen::Index i = 0; i < rec.hvp.size(); ++i) put_f64(out, rec.hvp(i));
  count.reals += static_cast<std::size_t>(rec.hvp.size());
}

GreedyRecord decode_record(std::span<const std::uint8_t> bytes, std::size_t n, std::size_t& offset,
                           std::size_t record, WireCount& count) {
  const std::uint32_t id = get_u32(bytes, offset, record);
  ++count.ids;
  if (id < 1 || id > n) throw ProtocolError("id " + std::to_string(id) + " outside 1.." + std::to_string(n), record);
  GreedyRecord rec;
  rec.index = id - 1;
  rec.hvp.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) rec.hvp(static_cast<Eigen::Index>(i)) = get_f64(bytes, offset, record);
  count.reals += n;
  return rec;
}

void check_record(const GreedyRecord& rec, std::size_t n, std::size_t record) {
  if (rec.index >= n) throw ProtocolError("index outside the basis", record);
  if (static_cast<std::size_t>(rec.hvp.size()) != n) throw ProtocolError("HVP has the wrong length", record);
  if (!rec.hvp.allFinite()) throw ProtocolError("HVP is not finite", record);
}

// Worker endpoint of the simulated star network.
struct Channel {
  std::vector<std::uint8_t> pull;  // master -> worker
  std::vector<std::uint8_t> push;  // worker -> master
};

struct Worker {
  const Objective* f = nullptr;
  HessianEstimate g;
  Vector x;
};

struct WorkerOutput {
  HessianEstimate estimate;
  std::size_t hvp_calls = 0;
};

// One worker round: read x+ from the pull buffer, run infvec, push the
// message and the new local gradient.
WorkerOutput worker_round(Worker& w, Channel& ch, std::size_t tau, double m, const BroydenVariant& variant) {
  const std::size_t n = w.f->dim();
  std::size_t off = 0;
  const Vector x_plus = decode_reals(ch.pull, n, off);
  InfvecResult r = infvec(w.g, w.x, x_plus, *w.f, tau, m, variant);
  ch.push.clear();
  encode_info_vector(r.message, ch.push);
  encode_reals(w.f->gradient(x_plus), ch.push);
  w.x = x_plus;
  return {std::move(r.estimate), r.hvp_calls};
}

double sum_values(std::span<const Objective* const> shards, const Vector& x) {
  double f = shards[0]->value(x);
  for (std::size_t i = 1; i < shards.size(); ++i) f += shards[i]->value(x);
  return f;
}

}  // namespace

std::size_t info_vector_scalars(std::size_t n, std::size_t tau) { return tau * (n + 1) + n + 2; }

WireCount encode_info_vector(const InfoVector& message, std::vector<std::uint8_t>& out) {
  WireCount count;
  for (const auto& rec : message.refinements) encode_record(rec, out, count);
  encode_record(message.correction, out, count);
  put_f64(out, message.residual);
  ++count.reals;
  return count;
}

InfoVector decode_info_vector(std::span<const std::uint8_t> bytes, std::size_t n, std::size_t tau,
                              std::size_t& offset, WireCount* count) {
  WireCount local;
  InfoVector msg;
  msg.refinements.reserve(tau);
  for (std::size_t t = 0; t < tau; ++t) msg.refinements.push_back(decode_record(bytes, n, offset, t, local));
  msg.correction = decode_record(bytes, n, offset, tau, local);
  msg.residual = get_f64(bytes, offset, tau + 1);
  ++local.reals;
  if (!(msg.residual >= 0.0) || !std::isfinite(msg.residual)) {
    throw ProtocolError("residual must be finite and nonnegative", tau + 1);
  }
  if (count) *count = local;
  return msg;
}

WireCount encode_reals(const Vector& v, std::vector<std::uint8_t>& out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
  return {0, static_cast<std::size_t>(v.size())};
}

Vector decode_reals(std::span<const std::uint8_t> bytes, std::size_t n, std::size_t& offset, WireCount* count) {
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = get_f64(bytes, offset, 0);
  if (count) *count = {0, n};
  return v;
}

InfvecResult infvec(HessianEstimate g_i, const Vector& x, const Vector& x_plus, const Objective& f_i,
                    std::size_t tau, double m, const BroydenVariant& variant) {
  HessianOracle here = make_oracle(f_i, x);
  RefineResult refined = gbroyd_tau(std::move(g_i), here, tau, variant);
  const Vector s = x_plus - x;
  const double r = weighted_norm(s, here.hvp(s));
  HessianOracle there = make_oracle(f_i, x_plus);
  CorrectionResult corrected = corrected_update_recorded(std::move(refined.estimate), r, m, there, variant);

  InfvecResult out;
  out.message.refinements = std::move(refined.records);
  out.message.correction = std::move(corrected.record);
  out.message.residual = r;
  out.estimate = std::move(corrected.estimate);
  out.hvp_calls = here.hvp_calls() + there.hvp_calls();
  return out;
}

HessianEstimate gupdate(HessianEstimate g_i, const InfoVector& message, double m, const BroydenVariant& variant) {
  const std::size_t n = g_i.order();
  const std::size_t tau = message.refinements.size();
  for (std::size_t t = 0; t < tau; ++t) {
    const GreedyRecord& rec = message.refinements[t];
    check_record(rec, n, t);
    g_i.apply(broyd_perturbation(variant, g_i, rec.index, rec.hvp));
  }
  if (!(message.residual >= 0.0) || !std::isfinite(message.residual)) {
    throw ProtocolError("residual must be finite and nonnegative", tau + 1);
  }
  apply_correction_scaling(g_i, message.residual, m);
  check_record(message.correction, n, tau);
  g_i.apply(broyd_perturbation(variant, g_i, message.correction.index, message.correction.hvp));
  return g_i;
}

CommReport comm_account(const RoundStats& stats, std::size_t n, std::size_t tau, std::size_t workers) {
  CommReport rep;
  rep.expected_push = info_vector_scalars(n, tau) + n;
  rep.expected_pull = n;
  if (stats.workers != workers) throw ProtocolError("worker count mismatch in round statistics", 0);
  if (stats.rounds > 0 && (stats.pushed_per_worker_per_round != rep.expected_push ||
                           stats.pulled_per_worker_per_round != rep.expected_pull)) {
    throw ProtocolError("observed " + std::to_string(stats.pushed_per_worker_per_round) + " pushed / " +
                            std::to_string(stats.pulled_per_worker_per_round) + " pulled scalars per round, expected " +
                            std::to_string(rep.expected_push) + " / " + std::to_string(rep.expected_pull),
                        0);
  }
  rep.push_per_worker_total = stats.rounds * rep.expected_push;
  rep.pull_per_worker_total = stats.rounds * rep.expected_pull;
  rep.push_all_workers = rep.push_per_worker_total * workers;
  rep.pull_all_workers = rep.pull_per_worker_total * workers;
  if (stats.pushed_scalars_total != rep.push_all_workers || stats.pulled_scalars_total != rep.pull_all_workers) {
    throw ProtocolError("cumulative scalar totals disagree with the per-round layout", 0);
  }
  return rep;
}

std::vector<LogisticObjective> partition_shards(const Dataset& data, std::size_t p, double gamma) {
  const std::vector<Dataset> parts = partition_dataset(data, p);
  std::vector<LogisticObjective> out;
  out.reserve(p);
  const double g = gamma / static_cast<double>(p);
  for (const auto& d : parts) {
    LogisticProblem prob = make_problem(d, g);
    const SmoothnessConstants c = computed_constants(prob);
    out.emplace_back(std::move(prob), c);
  }
  return out;
}

SmoothnessConstants combine_constants(std::span<const Objective* const> shards) {
  if (shards.empty()) throw InvalidArgument("no shards");
  SmoothnessConstants c = shards[0]->constants();
  for (const Objective* s : shards.subspan(1)) {
    const auto& o = s->constants();
    c.mu = std::min(c.mu, o.mu);
    c.omega = std::max(c.omega, o.omega);
    c.lipschitz = std::max(c.lipschitz, o.lipschitz);
    c.self_concordance = std::max(c.self_concordance, o.self_concordance);
  }
  return c;
}

DagqnResult dagqn_run(const std::vector<LogisticObjective>& shards, const Vector& x0, const DagqnConfig& config) {
  std::vector<const Objective*> ptrs;
  ptrs.reserve(shards.size());
  for (const auto& s : shards) ptrs.push_back(&s);
  return dagqn_run(std::span<const Objective* const>(ptrs), x0, config);
}

DagqnResult dagqn_run(std::span<const Objective* const> shards, const Vector& x0, const DagqnConfig& config) {
  if (shards.empty()) throw InvalidArgument("dagqn: need at least one shard");
  const std::size_t p = shards.size();
  const std::size_t n = shards[0]->dim();
  for (const Objective* s : shards) {
    if (s->dim() != n) throw InvalidArgument("dagqn: shard dimensions differ");
  }
  if (static_cast<std::size_t>(x0.size()) != n) throw InvalidArgument("x0 has the wrong dimension");
  if (!(config.tol > 0.0)) throw InvalidArgument("tol must be positive");

  const SmoothnessConstants constants = config.constants ? *config.constants : combine_constants(shards);
  const StepsizePolicy policy = StepsizePolicy::make(n, constants, config.tau, config.eps, p);
  const double m = constants.self_concordance;
  const double root_p = std::sqrt(static_cast<double>(p));

  DagqnResult out;
  SolverResult& result = out.result;
  RoundStats& stats = out.stats;
  stats.workers = p;

  std::vector<Worker> workers(p);
  std::vector<Channel> channels(p);
  std::vector<HessianEstimate> copies(p);
  for (std::size_t i = 0; i < p; ++i) {
    workers[i].f = shards[i];
    workers[i].x = x0;
    if (config.init == InitPolicy::warm_start) {
      std::size_t calls = 0;
      workers[i].g = warm_start_G0(*shards[i], constants, x0, policy.budget.eps / static_cast<double>(p),
                                   config.variant, &calls);
      result.setup_hvp_calls += calls;
    } else {
      workers[i].g = HessianEstimate::scaled_identity(n, constants.omega);
    }
    copies[i] = workers[i].g;
  }

  auto aggregate = [&]() -> HessianEstimate {
    if (p == 1) return copies[0];
    Matrix sum = copies[0].matrix().dense();
    for (std::size_t i = 1; i < p; ++i) sum += copies[i].matrix().dense();
    return HessianEstimate(SymMatrix(sum));
  };

  // Bootstrap: every worker pushes its gradient at x0.
  Vector grad;
  for (std::size_t i = 0; i < p; ++i) {
    channels[i].push.clear();
    const WireCount wc = encode_reals(shards[i]->gradient(x0), channels[i].push);
    stats.bootstrap_pushed_per_worker = wc.scalars();
    std::size_t off = 0;
    const Vector gi = decode_reals(channels[i].push, n, off);
    if (i == 0) {
      grad = gi;
    } else {
      grad += gi;
    }
  }
  result.gradient_evals += p;

  HessianEstimate g = aggregate();
  Vector x = x0;
  std::size_t hvp_total = 0;
  for (std::size_t k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.f = sum_values(shards, x);
    result.function_evals += p;
    rec.grad_norm = grad.norm();
    rec.hvp_calls = hvp_total;
    rec.comm_rounds = k;
    rec.scalars_pushed = stats.bootstrap_pushed_per_worker + k * stats.pushed_per_worker_per_round;
    if (config.diagnostics) {
      std::vector<SpdFactor> local;
      local.reserve(p);
      Matrix h_sum = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < p; ++i) {
        const SymMatrix hi = shards[i]->explicit_hessian(x);
        h_sum += hi.dense();
        local.emplace_back(hi);
      }
      const SpdFactor h(SymMatrix{h_sum});
      rec.sigma = sigma_metric(g, h);
      rec.delta = delta_metric(copies, local);
      rec.lambda = grad.isZero(0.0) ? 0.0 : dual_norm(grad, h);
      rec.potential = *rec.delta + 4.0 * static_cast<double>(n) * root_p * m * *rec.lambda;
    }
    if (config.record_iterates) result.iterates.push_back(x);

    if (rec.grad_norm <= config.tol || k == config.max_iters) {
      rec.beta = beta(rec.grad_norm, constants, p);
      result.trace.push_back(rec);
      result.termination =
          rec.grad_norm <= config.tol ? Termination::gradient_tolerance : Termination::max_iterations;
      result.iterations = k;
      break;
    }

    // Master step.
    const StepChoice step = adaptive_step(policy, grad, g.factor());
    const Vector x_next = x - step.alpha * g.factor().solve(grad);
    if (!x_next.allFinite()) throw DegenerateStepsize("iterate became non-finite at k=" + std::to_string(k));

    // Pull.
    for (std::size_t i = 0; i < p; ++i) {
      channels[i].pull.clear();
      const WireCount wc = encode_reals(x_next, channels[i].pull);
      stats.pulled_per_worker_per_round = wc.scalars();
      stats.pulled_scalars_total += wc.scalars();
      stats.pulled_bytes_total += wc.bytes();
    }

    // Workers.
    std::vector<WorkerOutput> outputs(p);
    if (config.parallel_workers && p > 1) {
      std::vector<std::future<WorkerOutput>> futures;
      futures.reserve(p);
      for (std::size_t i = 0; i < p; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
          return worker_round(workers[i], channels[i], config.tau, m, config.variant);
        }));
      }
      for (std::size_t i = 0; i < p; ++i) outputs[i] = futures[i].get();
    } else {
      for (std::size_t i = 0; i < p; ++i) outputs[i] = worker_round(workers[i], channels[i], config.tau, m, config.variant);
    }
    for (std::size_t i = 0; i < p; ++i) {
      workers[i].g = std::move(outputs[i].estimate);
      hvp_total += outputs[i].hvp_calls;
    }

    // Master: decode, replay, aggregate in worker-index order.
    double r_sq = 0.0;
    Vector grad_next;
    for (std::size_t i = 0; i < p; ++i) {
      std::size_t off = 0;
      WireCount info_count;
      WireCount grad_count;
      const InfoVector msg = decode_info_vector(channels[i].push, n, config.tau, off, &info_count);
      const Vector gi = decode_reals(channels[i].push, n, off, &grad_count);
      if (off != channels[i].push.size()) throw ProtocolError("trailing bytes in push from worker " + std::to_string(i + 1), 0);
      const std::size_t scalars = info_count.scalars() + grad_count.scalars();
      stats.pushed_per_worker_per_round = scalars;
      stats.pushed_scalars_total += scalars;
      stats.pushed_bytes_total += channels[i].push.size();

      copies[i] = gupdate(std::move(copies[i]), msg, m, config.variant);
      if (config.verify_replay) {
        if (!copies[i].bitwise_equal(workers[i].g)) {
          throw ProtocolError("master copy of worker " + std::to_string(i + 1) + " diverged at round " +
                                  std::to_string(k + 1),
                              0);
        }
        ++out.replay_checks;
      }
      r_sq += msg.residual * msg.residual;
      if (i == 0) {
        grad_next = gi;
      } else {
        grad_next += gi;
      }
    }
    result.gradient_evals += p;
    ++stats.rounds;

    rec.alpha = step.alpha;
    rec.alpha_tau = step.alpha_tau;
    rec.beta = step.beta;
    rec.r_next = std::sqrt(r_sq);
    result.trace.push_back(rec);

    g = aggregate();
    grad = std::move(grad_next);
    x = x_next;
  }
  result.x = x;
  result.hvp_calls = hvp_total;
  for (std::size_t i = 0; i < p; ++i) out.worker_estimates.push_back(workers[i].g);
  out.master_copies = std::move(copies);
  return out;
}

}  // namespace greedyqn
