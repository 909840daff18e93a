#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ras/problem.hpp"
#include "ras/runtime.hpp"

namespace ras {

enum class Variant { sync_1l, async_1l, sync_2l, async_2l_basic, async_2l_accurate };

std::string_view to_string(Variant v);
/// Accepts the CLI spellings: sync-1l, async-1l, sync-2l, async-2l-basic,
/// async-2l-accurate.
Variant parse_variant(std::string_view text);
bool is_async(Variant v);
bool is_two_level(Variant v);

enum class CoarseRootMode { inline_rank, dedicated };

std::string_view to_string(CoarseRootMode m);
CoarseRootMode parse_coarse_root_mode(std::string_view text);

/// Halo tags used by the solvers: regular iterate, snapshot, and the
/// exchange preceding the synchronous final check.
inline constexpr Tag kTagHalo = 1;
inline constexpr Tag kTagSnapshot = 2;
inline constexpr Tag kTagFinal = 3;

struct SolverConfig {
  Variant variant = Variant::sync_1l;
  double eps = 1e-6;
  std::uint64_t k_max = 10000;
  /// Corrected updates allowed per received coarse solution (accurate
  /// variant only).
  int max_corr = 5;
  int i0 = 0;
  /// Async two-level variants only; synchronous two-level always solves
  /// on rank i0.
  CoarseRootMode root_mode = CoarseRootMode::inline_rank;
  /// Blend weight of fine and coarse corrections.
  double coarse_weight = 0.5;
  /// Local-iteration cap per rank guarding against stalled runs.
  std::uint64_t watchdog_iterations = 2'000'000;

  void validate(int p) const;
};

/// Optional recording for oracle and invariant checks.
struct Instrumentation {
  /// Record the assembled global iterate after each of the first N sweeps.
  std::size_t record_iterates = 0;
  /// Record every snapshot round of the accurate variant.
  bool record_snapshots = false;
  /// Record all-reduce contributions and results for round-matching checks.
  bool record_norms = false;
};

/// Iteration state of one subdomain worker. `x` and `xbar` hold the local
/// slots followed by the ghost slots (x_i then x_{~i}).
struct RankState {
  Vector x;
  Vector r;
  Vector xbar;
  Vector rbar;
  Vector x0;
  Vector scratch;
  int state0 = 0;
  std::uint64_t k = 0;        // completed all-reduce rounds
  std::uint64_t k_local = 0;  // loop iterations
  int corr_used = 0;
  std::uint64_t x0_version = 0;
  std::uint64_t corrections = 0;
  int max_corr_in_version = 0;
  std::uint64_t snapshot_round = 0;

  static RankState zero(const SubdomainProblem &sub, int p);

  std::span<double> x_local(Index n_local) { return std::span(x).first(n_local); }
  std::span<double> x_halo(Index n_local) { return std::span(x).subspan(n_local); }
};

/// r_i := b_i - A_i x_i - C_i x_{~i}
void compute_residual(RankState &st, const SubdomainProblem &sub);
/// r̄_i := b_i - A_i x̄_i - C_i x̄_{~i}
void compute_snapshot_residual(RankState &st, const SubdomainProblem &sub);
/// r_i^T B_i r_i
double owned_square_norm(std::span<const double> r, const SubdomainProblem &sub);
/// Entry i of R_0 R_i^T B_i r_i (the only nonzero one).
double owned_sum(std::span<const double> r, const SubdomainProblem &sub);

/// x_i := x_i + A_i^{-1} r_i
void local_update(RankState &st, const SubdomainProblem &sub);
/// x_i := x_i + w (A_i^{-1} r_i + R_i R_0^T x0). Counts a correction when
/// a coarse solution has been received (x0_version > 0).
void corrected_update(RankState &st, const SubdomainProblem &sub,
                      const CoarseOperator &coarse, double weight = 0.5);

enum class ExitReason { detected, k_max, diverged, watchdog };
std::string_view to_string(ExitReason r);

struct RankReport {
  std::uint64_t k_rounds = 0;
  std::uint64_t final_checks = 0;  // synchronous checks run (async only)
  std::uint64_t k_local = 0;
  std::uint64_t coarse_solves = 0;  // coarse solutions received
  std::uint64_t corrections = 0;    // corrected updates with a received x0
  int max_corrections_per_version = 0;
  Index owned_n = 0;
};

/// Globally assembled snapshot round (owned components of every rank).
struct SnapshotRecord {
  std::uint64_t round = 0;
  Vector xbar;
  Vector rbar;
};

struct RunDiagnostics {
  std::vector<Vector> iterates;
  std::vector<SnapshotRecord> snapshots;
  std::uint64_t snapshot_seq_mismatches = 0;
  std::uint64_t allreduce_rounds_checked = 0;
  double allreduce_max_error = 0.0;
  /// max over coarse solves of |A0 x0 - r0| / |r0|
  double max_coarse_solve_residual = 0.0;
  std::vector<TraceEvent> trace;
};

struct RunReport {
  Variant variant = Variant::sync_1l;
  SolverConfig config;
  std::vector<RankReport> ranks;
  double wall_ms = 0.0;
  double final_relres = 0.0;
  double detected_relres = 0.0;  // last all-reduce estimate over |b|
  std::uint64_t coarse_solves = 0;        // solves performed at the root
  std::uint64_t corrections_applied = 0;  // sum over ranks
  std::uint64_t coarse_received = 0;      // sum over ranks
  bool converged = false;
  ExitReason exit = ExitReason::k_max;
  Vector x;
  RunDiagnostics diagnostics;
};

RunReport run_sync_ras(const ProblemSet &ps, const SolverConfig &cfg,
                       const Instrumentation &inst = {});
RunReport run_sync_two_level(const ProblemSet &ps, const CoarseOperator &coarse,
                             const SolverConfig &cfg,
                             const Instrumentation &inst = {});
RunReport run_async_ras(Runtime &rt, const ProblemSet &ps, const SolverConfig &cfg,
                        const Instrumentation &inst = {});
RunReport run_async_two_level_basic(Runtime &rt, const ProblemSet &ps,
                                    const CoarseOperator &coarse,
                                    const SolverConfig &cfg,
                                    const Instrumentation &inst = {});
RunReport run_async_two_level_accurate(Runtime &rt, const ProblemSet &ps,
                                       const CoarseOperator &coarse,
                                       const SolverConfig &cfg,
                                       const Instrumentation &inst = {});

/// Dispatches on cfg.variant. Asynchronous variants get a fresh runtime
/// built from `rt_opts` (dedicated_root follows cfg.root_mode); `coarse`
/// must be non-null for two-level variants.
RunReport run_variant(const ProblemSet &ps, const CoarseOperator *coarse,
                      const SolverConfig &cfg, const RuntimeOptions &rt_opts,
                      const Instrumentation &inst = {});

/// Global iterate assembled from the owned components of each rank.
Vector assemble_solution(const std::vector<RankState> &states, const ProblemSet &ps);

/// |b - A x| / |b| for the assembled x, computed synchronously.
double final_residual_check(const std::vector<RankState> &states, const ProblemSet &ps);

} // namespace ras
