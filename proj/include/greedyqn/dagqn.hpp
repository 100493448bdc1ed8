#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "greedyqn/agqn.hpp"
#include "greedyqn/broyden.hpp"
#include "greedyqn/data.hpp"
#include "greedyqn/objective.hpp"
#include "greedyqn/trace.hpp"

namespace greedyqn {

/// Everything the master needs to replay one worker's estimate update:
/// tau refinement records at x, the correction record at x+ and r = |x+ - x|.
struct InfoVector {
  std::vector<GreedyRecord> refinements;
  GreedyRecord correction;
  double residual = 0.0;
};

/// Scalars on the wire (each id counts as one): tau (n + 1) + n + 2.
std::size_t info_vector_scalars(std::size_t n, std::size_t tau);

struct WireCount {
  std::size_t ids = 0;
  std::size_t reals = 0;

  std::size_t scalars() const { return ids + reals; }
  std::size_t bytes() const { return 4 * ids + 8 * reals; }
};

// Little-endian layout: per refinement record a u32 id (1-based) followed by
// n f64 values, then the correction id and vector, then the residual.
WireCount encode_info_vector(const InfoVector& message, std::vector<std::uint8_t>& out);
InfoVector decode_info_vector(std::span<const std::uint8_t> bytes, std::size_t n, std::size_t tau,
                              std::size_t& offset, WireCount* count = nullptr);

WireCount encode_reals(const Vector& v, std::vector<std::uint8_t>& out);
Vector decode_reals(std::span<const std::uint8_t> bytes, std::size_t n, std::size_t& offset,
                    WireCount* count = nullptr);

struct InfvecResult {
  InfoVector message;
  HessianEstimate estimate;
  std::size_t hvp_calls = 0;
};

/// Worker side: tau greedy refinements at x, r via one HVP, corrected update
/// at x_plus. Uses exactly tau + 2 HVPs of f_i.
InfvecResult infvec(HessianEstimate g_i, const Vector& x, const Vector& x_plus, const Objective& f_i,
                    std::size_t tau, double m, const BroydenVariant& variant);

/// Replays a message without HVPs. Shared by worker and master so that both
/// copies stay bit-identical.
HessianEstimate gupdate(HessianEstimate g_i, const InfoVector& message, double m, const BroydenVariant& variant);

struct RoundStats {
  std::size_t workers = 0;
  std::size_t rounds = 0;
  std::size_t pushed_per_worker_per_round = 0;  // scalars
  std::size_t pulled_per_worker_per_round = 0;  // scalars
  std::size_t bootstrap_pushed_per_worker = 0;  // gradient at x0
  std::size_t pushed_scalars_total = 0;         // all workers, rounds only
  std::size_t pulled_scalars_total = 0;
  std::size_t pushed_bytes_total = 0;
  std::size_t pulled_bytes_total = 0;
};

struct CommReport {
  std::size_t expected_push = 0;  // tau (n + 1) + 2n + 2
  std::size_t expected_pull = 0;  // n
  std::size_t push_per_worker_total = 0;
  std::size_t pull_per_worker_total = 0;
  std::size_t push_all_workers = 0;
  std::size_t pull_all_workers = 0;
};

/// Totals and per-round breakdown; throws ProtocolError when the observed
/// counts differ from the layout arithmetic.
CommReport comm_account(const RoundStats& stats, std::size_t n, std::size_t tau, std::size_t workers);

/// Contiguous shards with regularization gamma / p each, so the shard
/// objectives sum to the full objective. Each shard carries computed constants.
std::vector<LogisticObjective> partition_shards(const Dataset& data, std::size_t p, double gamma);

struct DagqnConfig {
  std::size_t tau = 6;
  std::optional<double> eps;  // defaults to eps0
  double tol = 1e-9;
  std::size_t max_iters = 500;
  BroydenVariant variant = BroydenVariant::bfgs();
  InitPolicy init = InitPolicy::omega_identity;
  /// Per-worker constants; defaults to the shards' constants combined as
  /// min mu, max omega, max L, max M.
  std::optional<SmoothnessConstants> constants;
  bool diagnostics = false;
  bool parallel_workers = false;
  bool verify_replay = true;
  bool record_iterates = false;
};

struct DagqnResult {
  SolverResult result;
  RoundStats stats;
  std::vector<HessianEstimate> worker_estimates;
  std::vector<HessianEstimate> master_copies;
  std::size_t replay_checks = 0;
};

/// Synchronous master-worker rounds over in-memory channels.
DagqnResult dagqn_run(std::span<const Objective* const> shards, const Vector& x0, const DagqnConfig& config);
DagqnResult dagqn_run(const std::vector<LogisticObjective>& shards, const Vector& x0, const DagqnConfig& config);

/// min mu, max omega, max L, max M over the shards.
SmoothnessConstants combine_constants(std::span<const Objective* const> shards);

}  // namespace greedyqn
