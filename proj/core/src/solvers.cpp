#include "ras/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

#include "ras/error.hpp"

namespace ras {

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Variant v) {
  switch (v) {
  case Variant::sync_1l: return "sync-1l";
  case Variant::async_1l: return "async-1l";
  case Variant::sync_2l: return "sync-2l";
  case Variant::async_2l_basic: return "async-2l-basic";
  case Variant::async_2l_accurate: return "async-2l-accurate";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  for (auto v : {Variant::sync_1l, Variant::async_1l, Variant::sync_2l,
                 Variant::async_2l_basic, Variant::async_2l_accurate}) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

bool is_async(Variant v) {
  return v == Variant::async_1l || v == Variant::async_2l_basic ||
         v == Variant::async_2l_accurate;
}

bool is_two_level(Variant v) {
  return v == Variant::sync_2l || v == Variant::async_2l_basic ||
         v == Variant::async_2l_accurate;
}

std::string_view to_string(CoarseRootMode m) {
  return m == CoarseRootMode::inline_rank ? "inline" : "dedicated";
}

CoarseRootMode parse_coarse_root_mode(std::string_view text) {
  if (text == "inline") return CoarseRootMode::inline_rank;
  if (text == "dedicated") return CoarseRootMode::dedicated;
  throw ConfigError("unknown coarse rank mode '" + std::string(text) + "'");
}

std::string_view to_string(ExitReason r) {
  switch (r) {
  case ExitReason::detected: return "detected";
  case ExitReason::k_max: return "k_max";
  case ExitReason::diverged: return "diverged";
  case ExitReason::watchdog: return "watchdog";
  }
  return "?";
}

void SolverConfig::validate(int p) const {
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  if (max_corr < 1) throw ConfigError("max_corr must be >= 1");
  if (i0 < 0 || i0 >= p) {
    throw ConfigError("coarse root i0=" + std::to_string(i0) +
                      " outside [0, " + std::to_string(p) + ")");
  }
  if (!(coarse_weight > 0.0)) throw ConfigError("coarse weight must be > 0");
  if (watchdog_iterations < 1) throw ConfigError("watchdog must be >= 1");
}

// ---------------------------------------------------------------------------
// Local kernels

RankState RankState::zero(const SubdomainProblem &sub, int p) {
  RankState st;
  const auto n_ext = static_cast<std::size_t>(sub.n_local() + sub.n_ghost());
  const auto n_loc = static_cast<std::size_t>(sub.n_local());
  st.x.assign(n_ext, 0.0);
  st.xbar.assign(n_ext, 0.0);
  st.r.assign(n_loc, 0.0);
  st.rbar.assign(n_loc, 0.0);
  st.scratch.assign(n_loc, 0.0);
  st.x0.assign(static_cast<std::size_t>(p), 0.0);
  return st;
}

namespace {

void residual_into(std::span<double> out, std::span<const double> ext,
                   const SubdomainProblem &sub) {
  const Index n = sub.n_local();
  std::copy(sub.b.begin(), sub.b.end(), out.begin());
  spmv_add(sub.a_local, ext.first(n), -1.0, out);
  spmv_add(sub.coupling, ext.subspan(n), -1.0, out);
}

} // namespace

void compute_residual(RankState &st, const SubdomainProblem &sub) {
  residual_into(st.r, st.x, sub);
}

void compute_snapshot_residual(RankState &st, const SubdomainProblem &sub) {
  residual_into(st.rbar, st.xbar, sub);
}

double owned_square_norm(std::span<const double> r, const SubdomainProblem &sub) {
  double sum = 0.0;
  for (Index s : sub.owned_slots) sum += r[s] * r[s];
  return sum;
}

double owned_sum(std::span<const double> r, const SubdomainProblem &sub) {
  double sum = 0.0;
  for (Index s : sub.owned_slots) sum += r[s];
  return sum;
}

void local_update(RankState &st, const SubdomainProblem &sub) {
  std::copy(st.r.begin(), st.r.end(), st.scratch.begin());
  spd_solve_in_place(sub.factor, st.scratch);
  for (std::size_t s = 0; s < st.scratch.size(); ++s) st.x[s] += st.scratch[s];
}

void corrected_update(RankState &st, const SubdomainProblem &sub,
                      const CoarseOperator &coarse, double weight) {
  const auto &prolong = coarse.prolong_map.at(static_cast<std::size_t>(sub.id));
  std::copy(st.r.begin(), st.r.end(), st.scratch.begin());
  spd_solve_in_place(sub.factor, st.scratch);
  for (std::size_t s = 0; s < st.scratch.size(); ++s) {
    st.x[s] += weight * (st.scratch[s] + st.x0[prolong[s]]);
  }
  if (st.x0_version > 0) {
    ++st.corr_used;
    ++st.corrections;
    st.max_corr_in_version = std::max(st.max_corr_in_version, st.corr_used);
  }
}

Vector assemble_solution(const std::vector<RankState> &states, const ProblemSet &ps) {
  Vector x(static_cast<std::size_t>(ps.grid.size()), 0.0);
  for (int i = 0; i < ps.p(); ++i) {
    const auto &sub = ps.subs[i];
    for (Index s : sub.owned_slots) x[sub.global_of_local[s]] = states[i].x[s];
  }
  return x;
}

double final_residual_check(const std::vector<RankState> &states, const ProblemSet &ps) {
  const Vector x = assemble_solution(states, ps);
  Vector r = ps.b;
  spmv_add(ps.a, x, -1.0, r);
  return norm2(r) / ps.norm_b;
}

// ---------------------------------------------------------------------------
// Shared driver machinery

namespace {

struct SnapshotLog {
  std::uint64_t round;
  Vector xbar_owned;
  Vector rbar_owned;
};

struct RankLog {
  std::vector<Vector> iterates;
  std::vector<SnapshotLog> snapshots;
  std::vector<double> contributions;                  // by all-reduce round
  std::vector<std::pair<std::uint64_t, double>> reads; // (round, sum read)
  std::uint64_t seq_mismatches = 0;
  std::uint64_t final_checks = 0;
  std::uint64_t rounds = 0;  // all-reduce rounds posted
  double max_coarse_residual = 0.0;
  ExitReason exit = ExitReason::k_max;
  double last_norm = 0.0;
};

Vector owned_values(std::span<const double> v, const SubdomainProblem &sub) {
  Vector out;
  out.reserve(sub.owned_slots.size());
  for (Index s : sub.owned_slots) out.push_back(v[s]);
  return out;
}

class Driver {
public:
  Driver(const ProblemSet &ps, const CoarseOperator *coarse,
         const SolverConfig &cfg, const Instrumentation &inst)
      : ps_(ps), coarse_(coarse), cfg_(cfg), inst_(inst) {
    cfg_.validate(ps.p());
    if (is_two_level(cfg.variant)) {
      if (coarse == nullptr) {
        throw ContractViolation("two-level variant needs a coarse operator");
      }
      if (coarse->p != ps.p()) {
        throw ContractViolation("coarse operator does not match decomposition");
      }
    }
    for (int i = 0; i < ps.p(); ++i) states_.push_back(RankState::zero(ps.subs[i], ps.p()));
    logs_.resize(static_cast<std::size_t>(ps.p()));
  }

  void register_layouts(Runtime &rt) const {
    std::vector<std::vector<HaloSlots>> layouts;
    for (const auto &sub : ps_.subs) layouts.push_back(sub.halo_layout);
    if (cfg_.variant == Variant::async_2l_accurate) rt.register_halo(kTagSnapshot, layouts);
    if (is_async(cfg_.variant)) rt.register_halo(kTagFinal, layouts);
    rt.register_halo(kTagHalo, std::move(layouts));
  }

  void run_sync(Runtime &rt) { time(rt, [this, &rt](int rank) { sync_worker(rt, rank); }); }

  void run_async(Runtime &rt) {
    if (rt.size() != ps_.p()) {
      throw ContractViolation("runtime size does not match subdomain count");
    }
    const bool dedicated = is_two_level(cfg_.variant) &&
                           cfg_.root_mode == CoarseRootMode::dedicated;
    if (dedicated != (rt.dedicated_rank() >= 0)) {
      throw ContractViolation("runtime dedicated-root setting does not match "
                              "the solver configuration");
    }
    root_ = dedicated ? rt.dedicated_rank() : cfg_.i0;
    time(rt, [this, &rt](int rank) {
      if (rank >= ps_.p()) {
        coarse_worker(rt, rank);
      } else {
        async_worker(rt, rank);
      }
    });
    if (rt.options().trace) diagnostics_.trace = rt.trace();
  }

  RunReport report() const;

private:
  template <class F> void time(Runtime &rt, F &&body) {
    register_layouts(rt);
    const auto start = std::chrono::steady_clock::now();
    rt.run(body);
    wall_ms_ = std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
                   .count();
  }

  bool keep_going(double norm, std::uint64_t k) const {
    return norm >= cfg_.eps * ps_.norm_b && k < cfg_.k_max;
  }

  ExitReason exit_reason(double norm) const {
    if (!std::isfinite(norm)) return ExitReason::diverged;
    if (norm < cfg_.eps * ps_.norm_b) return ExitReason::detected;
    return ExitReason::k_max;
  }

  Vector coarse_solve(std::span<const double> r0, RankLog &log) {
    Vector x0 = spd_solve(coarse_->a0_factor, r0);
    const Vector ax = spmv(coarse_->a0, x0);
    double num = 0.0;
    for (std::size_t j = 0; j < ax.size(); ++j) num += (ax[j] - r0[j]) * (ax[j] - r0[j]);
    const double den = norm2(r0);
    if (den > 0.0) {
      log.max_coarse_residual = std::max(log.max_coarse_residual, std::sqrt(num) / den);
    }
    coarse_solves_.fetch_add(1);
    return x0;
  }

  void maybe_record_iterate(int rank) {
    auto &st = states_[rank];
    if (st.k_local < inst_.record_iterates) {
      logs_[rank].iterates.push_back(owned_values(st.x, ps_.subs[rank]));
    }
  }

  void exchange_halo(Runtime &rt, int rank) {
    auto &st = states_[rank];
    const auto &sub = ps_.subs[rank];
    auto reqs = rt.post_halo_exchange(rank, kTagHalo, st.x_local(sub.n_local()));
    rt.free_on_complete(reqs);
    rt.end_step(rank);
    rt.receive_halo(rank, kTagHalo, st.x);
  }

  double final_check(Runtime &rt, int rank, Request &req_r);
  void sync_worker(Runtime &rt, int rank);
  void async_worker(Runtime &rt, int rank);
  void coarse_worker(Runtime &rt, int rank);

  const ProblemSet &ps_;
  const CoarseOperator *coarse_;
  SolverConfig cfg_;
  Instrumentation inst_;
  int root_ = 0;
  std::vector<RankState> states_;
  std::vector<RankLog> logs_;
  std::atomic<std::uint64_t> coarse_solves_{0};
  RankLog dedicated_log_;
  double wall_ms_ = 0.0;
  RunDiagnostics diagnostics_;
};

// Synchronous sweeps over the runtime: exact halo each sweep, blocking
// reductions for the residual norm and the coarse right-hand side.
void Driver::sync_worker(Runtime &rt, int rank) {
  auto &st = states_[rank];
  auto &log = logs_[rank];
  const auto &sub = ps_.subs[rank];
  const bool two_level = cfg_.variant == Variant::sync_2l;

  compute_residual(st, sub);
  double norm = std::sqrt(rt.allreduce_sum(rank, owned_square_norm(st.r, sub)));
  while (keep_going(norm, st.k) && std::isfinite(norm)) {
    if (two_level) {
      const auto r0 = rt.gather_to_root(rank, owned_sum(st.r, sub), cfg_.i0);
      Vector x0;
      if (rank == cfg_.i0) x0 = coarse_solve(r0, log);
      st.x0 = rt.bcast(rank, x0, cfg_.i0);
      ++st.x0_version;
      st.corr_used = 0;
      corrected_update(st, sub, *coarse_, cfg_.coarse_weight);
    } else {
      local_update(st, sub);
    }
    maybe_record_iterate(rank);
    ++st.k_local;
    exchange_halo(rt, rank);
    compute_residual(st, sub);
    norm = std::sqrt(rt.allreduce_sum(rank, owned_square_norm(st.r, sub)));
    ++st.k;
  }
  log.exit = exit_reason(norm);
  log.last_norm = norm;
}

// One compute rank of the asynchronous variants. The loop body follows the
// published pseudocode; the halo synchronization is split around the step
// boundary so that lockstep + immediate delivery reproduces the
// synchronous sweeps exactly.
void Driver::async_worker(Runtime &rt, int rank) {
  auto &st = states_[rank];
  auto &log = logs_[rank];
  const auto &sub = ps_.subs[rank];
  const Variant variant = cfg_.variant;
  const Index n_local = sub.n_local();

  compute_residual(st, sub);
  double rr = rt.allreduce_sum(rank, owned_square_norm(st.r, sub));
  double norm = std::sqrt(rr);

  Request req_r;  // REQUEST_NULL
  Request req_r0;
  Request req_x0;
  std::vector<Request> reqs_xbar;

  auto receive_coarse = [&](const Request &req) {
    st.x0 = req.result();
    ++st.x0_version;
    st.corr_used = 0;
  };
  auto post_coarse_bcast = [&] {
    Vector x0;
    if (rank == root_) x0 = coarse_solve(req_r0.result(), log);
    req_x0 = rt.i_bcast(rank, x0, root_);
  };

  log.exit = ExitReason::k_max;
  while (true) {
  while (keep_going(norm, st.k)) {
    if (rt.aborted()) return;
    if (st.k_local >= cfg_.watchdog_iterations) {
      log.exit = ExitReason::watchdog;
      break;
    }

    switch (variant) {
    case Variant::async_1l:
      local_update(st, sub);
      break;

    case Variant::async_2l_basic: {
      if (st.state0 == 0) {
        req_r0 = rt.i_reduce_to_root(rank, owned_sum(st.r, sub), root_);
        st.state0 = 1;
      }
      if (st.state0 == 1 && rt.test(req_r0)) {
        post_coarse_bcast();
        st.state0 = 2;
      }
      if (st.state0 == 2 && rt.test(req_x0)) {
        receive_coarse(req_x0);
        corrected_update(st, sub, *coarse_, cfg_.coarse_weight);
        st.state0 = 0;
      } else {
        local_update(st, sub);
      }
      break;
    }

    case Variant::async_2l_accurate: {
      if (st.state0 == 0) {
        st.xbar = st.x;
        reqs_xbar = rt.post_halo_exchange(rank, kTagSnapshot, std::span(st.xbar).first(n_local));
        st.state0 = 1;
      }
      if (st.state0 == 1 && rt.test_all(reqs_xbar)) {
        const auto receipt = rt.receive_halo(rank, kTagSnapshot, st.xbar);
        for (auto seq : receipt.last_seq) {
          if (seq != static_cast<std::int64_t>(st.snapshot_round)) ++log.seq_mismatches;
        }
        compute_snapshot_residual(st, sub);
        if (inst_.record_snapshots) {
          log.snapshots.push_back({st.snapshot_round, owned_values(st.xbar, sub),
                                   owned_values(st.rbar, sub)});
        }
        ++st.snapshot_round;
        req_r0 = rt.i_reduce_to_root(rank, owned_sum(st.rbar, sub), root_);
        st.state0 = 2;
      }
      if (st.state0 == 2 && rt.test(req_r0)) {
        post_coarse_bcast();
        st.state0 = 3;
      }
      if (st.state0 == 3 && rt.test(req_x0)) {
        receive_coarse(req_x0);
        st.state0 = 0;
      }
      // Before the first coarse solution arrives x0 = 0 and the blend is a
      // damped local update; afterwards each x0 is reused up to max_corr
      // times, then the plain update takes over.
      if (st.x0_version == 0 || st.corr_used < cfg_.max_corr) {
        corrected_update(st, sub, *coarse_, cfg_.coarse_weight);
      } else {
        local_update(st, sub);
      }
      break;
    }

    default:
      throw ContractViolation("async_worker: synchronous variant");
    }

    maybe_record_iterate(rank);
    ++st.k_local;
    exchange_halo(rt, rank);
    compute_residual(st, sub);

    if (rt.test(req_r)) {
      if (!req_r.is_null()) {
        rr = req_r.result().front();
        if (inst_.record_norms) log.reads.emplace_back(log.rounds - 1, rr);
      }
      norm = std::sqrt(rr);
      const double contribution = owned_square_norm(st.r, sub);
      if (inst_.record_norms) log.contributions.push_back(contribution);
      req_r = rt.i_allreduce_sum(rank, contribution);
      ++log.rounds;
      ++st.k;
      if (!std::isfinite(norm)) break;
    }
  }
  if (log.exit == ExitReason::watchdog || exit_reason(norm) != ExitReason::detected) break;
  // The detected norm lags the iterate by a round and may have caught a
  // dip; iteration resumes unless the exact residual passes too.
  rr = final_check(rt, rank, req_r);
  norm = std::sqrt(rr);
  if (norm < cfg_.eps * ps_.norm_b || st.k >= cfg_.k_max || rt.aborted()) break;
  }
  if (log.exit != ExitReason::watchdog) log.exit = exit_reason(norm);
  log.last_norm = norm;
}

// Exact residual norm of the current global iterate. Every compute rank
// enters this at the same detection round, so the final-tag posts and the
// all-reduce rounds line up across ranks.
double Driver::final_check(Runtime &rt, int rank, Request &req_r) {
  auto &st = states_[rank];
  auto &log = logs_[rank];
  const auto &sub = ps_.subs[rank];
  ++log.final_checks;
  while (!rt.test(req_r)) rt.end_step(rank);
  if (!req_r.is_null() && inst_.record_norms) {
    log.reads.emplace_back(log.rounds - 1, req_r.result().front());
  }
  req_r = Request{};

  auto reqs = rt.post_halo_exchange(rank, kTagFinal, st.x_local(sub.n_local()));
  while (!rt.test_all(reqs)) rt.end_step(rank);
  rt.receive_halo(rank, kTagFinal, st.x);
  compute_residual(st, sub);

  const double contribution = owned_square_norm(st.r, sub);
  if (inst_.record_norms) log.contributions.push_back(contribution);
  Request req = rt.i_allreduce_sum(rank, contribution);
  ++log.rounds;
  while (!rt.test(req)) rt.end_step(rank);
  const double sum = req.result().front();
  if (inst_.record_norms) log.reads.emplace_back(log.rounds - 1, sum);
  return sum;
}

// Dedicated coarse rank: gather, solve, broadcast, until the compute ranks
// have all left their loops.
void Driver::coarse_worker(Runtime &rt, int rank) {
  Request req_r0;
  Request req_x0;
  bool posted = false;
  while (rt.active_compute_ranks() > 0 && !rt.aborted()) {
    if (!posted) {
      req_r0 = rt.i_reduce_to_root(rank, 0.0, rank);
      posted = true;
    }
    if (rt.test(req_r0)) {
      const Vector x0 = coarse_solve(req_r0.result(), dedicated_log_);
      req_x0 = rt.i_bcast(rank, x0, rank);
      rt.test(req_x0);
      posted = false;
    }
    rt.end_step(rank);
  }
}

RunReport Driver::report() const {
  RunReport rep;
  rep.variant = cfg_.variant;
  rep.config = cfg_;
  rep.wall_ms = wall_ms_;
  rep.coarse_solves = coarse_solves_.load();
  rep.diagnostics = diagnostics_;
  const int p = ps_.p();

  bool all_detected = true;
  bool any_diverged = false;
  bool any_watchdog = false;
  double worst_norm = 0.0;
  for (int i = 0; i < p; ++i) {
    const auto &st = states_[i];
    const auto &log = logs_[i];
    RankReport rr;
    rr.k_rounds = st.k;
    rr.final_checks = log.final_checks;
    rr.k_local = st.k_local;
    rr.coarse_solves = st.x0_version;
    rr.corrections = st.corrections;
    rr.max_corrections_per_version = st.max_corr_in_version;
    rr.owned_n = static_cast<Index>(ps_.subs[i].owned_slots.size());
    rep.ranks.push_back(rr);
    rep.corrections_applied += st.corrections;
    rep.coarse_received += st.x0_version;
    all_detected = all_detected && log.exit == ExitReason::detected;
    any_diverged = any_diverged || log.exit == ExitReason::diverged;
    any_watchdog = any_watchdog || log.exit == ExitReason::watchdog;
    worst_norm = std::max(worst_norm, log.last_norm);
    if (!std::isfinite(log.last_norm)) worst_norm = log.last_norm;
    rep.diagnostics.snapshot_seq_mismatches += log.seq_mismatches;
    rep.diagnostics.max_coarse_solve_residual =
        std::max(rep.diagnostics.max_coarse_solve_residual, log.max_coarse_residual);
  }
  rep.diagnostics.max_coarse_solve_residual = std::max(
      rep.diagnostics.max_coarse_solve_residual, dedicated_log_.max_coarse_residual);

  rep.exit = any_diverged   ? ExitReason::diverged
             : any_watchdog ? ExitReason::watchdog
             : all_detected ? ExitReason::detected
                            : ExitReason::k_max;
  rep.detected_relres = worst_norm / ps_.norm_b;
  rep.x = assemble_solution(states_, ps_);
  rep.final_relres = final_residual_check(states_, ps_);
  rep.converged = rep.exit == ExitReason::detected && rep.final_relres < cfg_.eps;

  // Iterates: sweep k is complete when every rank recorded it.
  if (inst_.record_iterates > 0) {
    std::size_t sweeps = inst_.record_iterates;
    for (const auto &log : logs_) sweeps = std::min(sweeps, log.iterates.size());
    for (std::size_t k = 0; k < sweeps; ++k) {
      Vector x(static_cast<std::size_t>(ps_.grid.size()), 0.0);
      for (int i = 0; i < p; ++i) {
        const auto &sub = ps_.subs[i];
        const auto &vals = logs_[i].iterates[k];
        for (std::size_t s = 0; s < sub.owned_slots.size(); ++s) {
          x[sub.global_of_local[sub.owned_slots[s]]] = vals[s];
        }
      }
      rep.diagnostics.iterates.push_back(std::move(x));
    }
  }

  if (inst_.record_snapshots) {
    std::size_t rounds = SIZE_MAX;
    for (const auto &log : logs_) rounds = std::min(rounds, log.snapshots.size());
    for (std::size_t m = 0; m < rounds; ++m) {
      SnapshotRecord rec;
      rec.round = m;
      rec.xbar.assign(static_cast<std::size_t>(ps_.grid.size()), 0.0);
      rec.rbar.assign(static_cast<std::size_t>(ps_.grid.size()), 0.0);
      for (int i = 0; i < p; ++i) {
        const auto &sub = ps_.subs[i];
        const auto &snap = logs_[i].snapshots[m];
        if (snap.round != m) continue;
        for (std::size_t s = 0; s < sub.owned_slots.size(); ++s) {
          const auto g = sub.global_of_local[sub.owned_slots[s]];
          rec.xbar[g] = snap.xbar_owned[s];
          rec.rbar[g] = snap.rbar_owned[s];
        }
      }
      rep.diagnostics.snapshots.push_back(std::move(rec));
    }
  }

  if (inst_.record_norms) {
    std::size_t rounds = SIZE_MAX;
    for (const auto &log : logs_) rounds = std::min(rounds, log.contributions.size());
    for (const auto &log : logs_) {
      for (const auto &[round, value] : log.reads) {
        if (round >= rounds) continue;
        double expected = 0.0;
        for (const auto &other : logs_) expected += other.contributions[round];
        rep.diagnostics.allreduce_max_error =
            std::max(rep.diagnostics.allreduce_max_error, std::abs(value - expected));
        ++rep.diagnostics.allreduce_rounds_checked;
      }
    }
  }
  return rep;
}

RuntimeOptions sync_runtime_options() {
  RuntimeOptions opts;
  opts.delay = DelayModel::immediate();
  opts.schedule = Schedule::lockstep;
  return opts;
}

} // namespace

// ---------------------------------------------------------------------------
// Public entry points

RunReport run_sync_ras(const ProblemSet &ps, const SolverConfig &cfg,
                       const Instrumentation &inst) {
  auto c = cfg;
  c.variant = Variant::sync_1l;
  Driver d(ps, nullptr, c, inst);
  Runtime rt(ps.p(), sync_runtime_options());
  d.run_sync(rt);
  return d.report();
}

RunReport run_sync_two_level(const ProblemSet &ps, const CoarseOperator &coarse,
                             const SolverConfig &cfg, const Instrumentation &inst) {
  auto c = cfg;
  c.variant = Variant::sync_2l;
  Driver d(ps, &coarse, c, inst);
  Runtime rt(ps.p(), sync_runtime_options());
  d.run_sync(rt);
  return d.report();
}

RunReport run_async_ras(Runtime &rt, const ProblemSet &ps, const SolverConfig &cfg,
                        const Instrumentation &inst) {
  auto c = cfg;
  c.variant = Variant::async_1l;
  Driver d(ps, nullptr, c, inst);
  d.run_async(rt);
  return d.report();
}

RunReport run_async_two_level_basic(Runtime &rt, const ProblemSet &ps,
                                    const CoarseOperator &coarse,
                                    const SolverConfig &cfg,
                                    const Instrumentation &inst) {
  auto c = cfg;
  c.variant = Variant::async_2l_basic;
  Driver d(ps, &coarse, c, inst);
  d.run_async(rt);
  return d.report();
}

RunReport run_async_two_level_accurate(Runtime &rt, const ProblemSet &ps,
                                       const CoarseOperator &coarse,
                                       const SolverConfig &cfg,
                                       const Instrumentation &inst) {
  auto c = cfg;
  c.variant = Variant::async_2l_accurate;
  Driver d(ps, &coarse, c, inst);
  d.run_async(rt);
  return d.report();
}

RunReport run_variant(const ProblemSet &ps, const CoarseOperator *coarse,
                      const SolverConfig &cfg, const RuntimeOptions &rt_opts,
                      const Instrumentation &inst) {
  if (is_two_level(cfg.variant) && coarse == nullptr) {
    throw ContractViolation("run_variant: two-level variant needs a coarse operator");
  }
  if (!is_async(cfg.variant)) {
    return cfg.variant == Variant::sync_1l ? run_sync_ras(ps, cfg, inst)
                                           : run_sync_two_level(ps, *coarse, cfg, inst);
  }
  auto opts = rt_opts;
  opts.dedicated_root = is_two_level(cfg.variant) &&
                        cfg.root_mode == CoarseRootMode::dedicated;
  Runtime rt(ps.p(), opts);
  switch (cfg.variant) {
  case Variant::async_1l:
    return run_async_ras(rt, ps, cfg, inst);
  case Variant::async_2l_basic:
    return run_async_two_level_basic(rt, ps, *coarse, cfg, inst);
  default:
    return run_async_two_level_accurate(rt, ps, *coarse, cfg, inst);
  }
}

} // namespace ras
