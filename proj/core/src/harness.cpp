#include "ras/harness.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ras/error.hpp"

namespace ras {

void ExperimentConfig::validate() const {
  grid.validate();
  if (procs.px < 1 || procs.py < 1 || procs.pz < 1) {
    throw ConfigError("process grid entries must be >= 1");
  }
  if (procs.px > grid.nx || procs.py > grid.ny || procs.pz > grid.nz) {
    throw ConfigError("process grid exceeds the node grid");
  }
  if (overlap < 0) throw ConfigError("overlap must be >= 0");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (coarse_delay_scale < 1) throw ConfigError("coarse delay scale must be >= 1");
  delay.validate();
  solver_config().validate(procs.count());
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig c;
  c.variant = variant;
  c.eps = eps;
  c.k_max = k_max;
  c.max_corr = max_corr;
  c.i0 = i0;
  c.root_mode = root_mode;
  return c;
}

RuntimeOptions ExperimentConfig::runtime_options(std::uint64_t run_seed) const {
  RuntimeOptions o;
  o.delay = delay;
  o.seed = run_seed;
  o.coarse_delay_scale = coarse_delay_scale;
  o.schedule = schedule;
  o.trace = !trace_path.empty();
  return o;
}

std::vector<CsvRow> rows_for(const RunReport &report, const ExperimentConfig &cfg,
                             std::uint64_t run_id, std::uint64_t seed) {
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < report.ranks.size(); ++i) {
    const auto &rr = report.ranks[i];
    CsvRow row;
    row.run_id = run_id;
    row.variant = std::string(to_string(report.variant));
    row.p = cfg.procs.count();
    row.px = cfg.procs.px;
    row.py = cfg.procs.py;
    row.pz = cfg.procs.pz;
    row.local_n = rr.owned_n;
    row.overlap = cfg.overlap;
    row.eps = cfg.eps;
    row.seed = seed;
    row.rank = static_cast<int>(i);
    row.k_rounds = rr.k_rounds;
    row.k_local = rr.k_local;
    row.coarse_solves = rr.coarse_solves;
    row.corrections = rr.corrections;
    row.wall_ms = report.wall_ms;
    row.final_relres = report.final_relres;
    row.converged = report.converged;
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg,
                                std::uint64_t first_run_id) {
  cfg.validate();
  const ProblemSet ps = make_problem(cfg.grid, cfg.procs, cfg.overlap);
  CoarseOperator coarse;
  if (is_two_level(cfg.variant)) coarse = build_coarse(ps.a, ps.dec);
  const auto solver = cfg.solver_config();

  ExperimentResult out;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    auto report = run_variant(ps, is_two_level(cfg.variant) ? &coarse : nullptr,
                              solver, cfg.runtime_options(seed));
    auto rows = rows_for(report, cfg, first_run_id + static_cast<std::uint64_t>(rep), seed);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    out.all_converged = out.all_converged && report.converged;
    out.reports.push_back(std::move(report));
  }
  return out;
}

GridSpec scaled_grid(const std::array<Index, 3> &local, const ProcGrid &procs,
                     double g) {
  return {local[0] * procs.px, local[1] * procs.py, local[2] * procs.pz, g};
}

ExperimentResult weak_scaling_sweep(const ExperimentConfig &base,
                                    const std::vector<Variant> &variants,
                                    const std::vector<ProcGrid> &proc_grids,
                                    const std::array<Index, 3> &local) {
  if (variants.empty() || proc_grids.empty()) {
    throw ConfigError("sweep needs at least one variant and one process grid");
  }
  ExperimentResult out;
  std::uint64_t run_id = 0;
  for (const Variant v : variants) {
    for (const auto &procs : proc_grids) {
      auto cfg = base;
      cfg.variant = v;
      cfg.procs = procs;
      cfg.grid = scaled_grid(local, procs, base.grid.g);
      auto part = run_experiment(cfg, run_id);
      run_id += static_cast<std::uint64_t>(cfg.repetitions);
      out.rows.insert(out.rows.end(), part.rows.begin(), part.rows.end());
      out.all_converged = out.all_converged && part.all_converged;
      for (auto &r : part.reports) out.reports.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

template <class T> void put(std::string &line, T value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  line.append(buf, res.ptr);
}

template <class T> T take(std::string_view field, std::size_t line_no) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ConfigError("csv line " + std::to_string(line_no) + ": bad field '" +
                      std::string(field) + "'");
  }
  return value;
}

} // namespace

void write_csv(std::ostream &os, const std::vector<CsvRow> &rows) {
  os << kCsvHeader << '\n';
  std::string line;
  for (const auto &r : rows) {
    line.clear();
    put(line, r.run_id);
    line += ',';
    line += r.variant;
    for (long long v : {static_cast<long long>(r.p), static_cast<long long>(r.px),
                        static_cast<long long>(r.py), static_cast<long long>(r.pz),
                        static_cast<long long>(r.local_n),
                        static_cast<long long>(r.overlap)}) {
      line += ',';
      put(line, v);
    }
    line += ',';
    put(line, r.eps);
    line += ',';
    put(line, r.seed);
    line += ',';
    put(line, r.rank);
    for (auto v : {r.k_rounds, r.k_local, r.coarse_solves, r.corrections}) {
      line += ',';
      put(line, v);
    }
    line += ',';
    put(line, r.wall_ms);
    line += ',';
    put(line, r.final_relres);
    line += r.converged ? ",1" : ",0";
    os << line << '\n';
  }
}

void emit_csv(const std::vector<CsvRow> &rows, const std::string &path) {
  if (rows.empty()) throw ContractViolation("emit_csv: no rows");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, rows);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<CsvRow> read_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw ConfigError("csv: missing or unexpected header");
  }
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 18) {
      throw ConfigError("csv line " + std::to_string(line_no) + ": expected 18 fields");
    }
    CsvRow r;
    r.run_id = take<std::uint64_t>(f[0], line_no);
    r.variant = std::string(f[1]);
    r.p = take<int>(f[2], line_no);
    r.px = take<int>(f[3], line_no);
    r.py = take<int>(f[4], line_no);
    r.pz = take<int>(f[5], line_no);
    r.local_n = take<Index>(f[6], line_no);
    r.overlap = take<int>(f[7], line_no);
    r.eps = take<double>(f[8], line_no);
    r.seed = take<std::uint64_t>(f[9], line_no);
    r.rank = take<int>(f[10], line_no);
    r.k_rounds = take<std::uint64_t>(f[11], line_no);
    r.k_local = take<std::uint64_t>(f[12], line_no);
    r.coarse_solves = take<std::uint64_t>(f[13], line_no);
    r.corrections = take<std::uint64_t>(f[14], line_no);
    r.wall_ms = take<double>(f[15], line_no);
    r.final_relres = take<double>(f[16], line_no);
    r.converged = take<int>(f[17], line_no) != 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_trace(const std::vector<TraceEvent> &trace, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto &e : trace) {
    out << e.tick << ',' << e.src << ',' << e.dst << ',' << e.tag << ',' << e.seq << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace ras
