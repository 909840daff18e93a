#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ras/problem.hpp"
#include "ras/runtime.hpp"
#include "ras/solvers.hpp"

namespace ras {

struct ExperimentConfig {
  GridSpec grid{8, 8, 8};
  ProcGrid procs{2, 2, 2};
  int overlap = 2;
  Variant variant = Variant::sync_1l;
  double eps = 1e-6;
  std::uint64_t k_max = 10000;
  int max_corr = 5;
  int i0 = 0;
  CoarseRootMode root_mode = CoarseRootMode::inline_rank;
  DelayModel delay;
  std::uint64_t seed = 1;
  Tick coarse_delay_scale = 1;
  Schedule schedule = Schedule::lockstep;
  int repetitions = 1;
  std::string csv_path;
  std::string trace_path;
  bool allow_nonconverged = false;

  /// Throws ConfigError for anything the lower layers would reject.
  void validate() const;
  SolverConfig solver_config() const;
  RuntimeOptions runtime_options(std::uint64_t run_seed) const;
};

struct CsvRow {
  std::uint64_t run_id = 0;
  std::string variant;
  int p = 0;
  int px = 0;
  int py = 0;
  int pz = 0;
  Index local_n = 0;
  int overlap = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  int rank = 0;
  std::uint64_t k_rounds = 0;
  std::uint64_t k_local = 0;
  std::uint64_t coarse_solves = 0;
  std::uint64_t corrections = 0;
  double wall_ms = 0.0;
  double final_relres = 0.0;
  bool converged = false;

  bool operator==(const CsvRow &) const = default;
};

inline constexpr const char *kCsvHeader =
    "run_id,variant,p,px,py,pz,local_n,overlap,eps,seed,rank,k_rounds,"
    "k_local,coarse_solves,corrections,wall_ms,final_relres,converged";

struct ExperimentResult {
  std::vector<CsvRow> rows;
  std::vector<RunReport> reports;  // one per repetition
  bool all_converged = true;
};

/// Runs `repetitions` runs with seeds seed, seed+1, ... Run ids continue
/// from `first_run_id`.
ExperimentResult run_experiment(const ExperimentConfig &cfg,
                                std::uint64_t first_run_id = 0);

/// One row per rank of `report`.
std::vector<CsvRow> rows_for(const RunReport &report, const ExperimentConfig &cfg,
                             std::uint64_t run_id, std::uint64_t seed);

/// Global grid of a weak-scaling point: local size times the proc grid.
GridSpec scaled_grid(const std::array<Index, 3> &local, const ProcGrid &procs,
                     double g = kDefaultSource);

/// Every (variant, proc grid) pair, variants outermost; grid size follows
/// the proc grid so each subdomain owns `local` nodes.
ExperimentResult weak_scaling_sweep(const ExperimentConfig &base,
                                    const std::vector<Variant> &variants,
                                    const std::vector<ProcGrid> &proc_grids,
                                    const std::array<Index, 3> &local);

void write_csv(std::ostream &os, const std::vector<CsvRow> &rows);
/// Throws ContractViolation on empty rows, IoError if the file cannot be
/// written.
void emit_csv(const std::vector<CsvRow> &rows, const std::string &path);
/// Parses what write_csv produced. Throws ConfigError on malformed input.
std::vector<CsvRow> read_csv(std::istream &is);

void emit_trace(const std::vector<TraceEvent> &trace, const std::string &path);

} // namespace ras
