#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "ras/error.hpp"

namespace ras::cli {

namespace {

struct RawOptions {
  std::string variant;
  std::string grid = "8x8x8";
  std::string proc;
  std::string local = "10x10x10";
  int overlap = 2;
  double eps = 1e-6;
  std::uint64_t k_max = 10000;
  int max_corr = 5;
  int i0 = 0;
  std::string root_mode = "inline";
  std::string delay = "immediate";
  std::string schedule = "lockstep";
  std::uint64_t seed = 1;
  std::uint64_t coarse_delay_scale = 1;
  int reps = 1;
  std::string csv;
  std::string trace;
  bool allow_nonconverged = false;
};

void add_common(CLI::App &cmd, RawOptions &o) {
  cmd.add_option("--overlap", o.overlap, "Overlap in mesh layers")->capture_default_str();
  cmd.add_option("--eps", o.eps, "Relative residual tolerance")->capture_default_str();
  cmd.add_option("--kmax", o.k_max, "Maximum all-reduce rounds")->capture_default_str();
  cmd.add_option("--max-corr", o.max_corr, "Corrections per coarse solution")
      ->capture_default_str();
  cmd.add_option("--i0", o.i0, "Rank hosting the coarse solve")->capture_default_str();
  cmd.add_option("--coarse-rank-mode", o.root_mode, "inline or dedicated")
      ->check(CLI::IsMember({"inline", "dedicated"}))
      ->capture_default_str();
  cmd.add_option("--delay", o.delay, "immediate | fixed:T | uniform:LO:HI")
      ->capture_default_str();
  cmd.add_option("--coarse-delay-scale", o.coarse_delay_scale,
                 "Delay multiplier for coarse-path messages")
      ->capture_default_str();
  cmd.add_option("--schedule", o.schedule, "lockstep or free")
      ->check(CLI::IsMember({"lockstep", "free"}))
      ->capture_default_str();
  cmd.add_option("--seed", o.seed, "Base seed")->capture_default_str();
  cmd.add_option("--reps", o.reps, "Repetitions, seeds seed..seed+reps-1")
      ->capture_default_str();
  cmd.add_option("--csv", o.csv, "CSV output path (default stdout)");
  cmd.add_option("--trace", o.trace, "Message trace output path");
  cmd.add_flag("--allow-nonconverged", o.allow_nonconverged,
               "Exit 0 even if a run does not converge");
}

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ProcGrid to_procs(const std::string &text) {
  const auto t = parse_triple(text);
  const Index cap = std::numeric_limits<int>::max();
  if (t[0] > cap || t[1] > cap || t[2] > cap) {
    throw ConfigError("process grid '" + text + "' too large");
  }
  return {static_cast<int>(t[0]), static_cast<int>(t[1]), static_cast<int>(t[2])};
}

ExperimentConfig to_config(const RawOptions &o) {
  ExperimentConfig c;
  c.overlap = o.overlap;
  c.eps = o.eps;
  c.k_max = o.k_max;
  c.max_corr = o.max_corr;
  c.i0 = o.i0;
  c.root_mode = parse_coarse_root_mode(o.root_mode);
  c.delay = DelayModel::parse(o.delay);
  c.schedule = o.schedule == "free" ? Schedule::free_running : Schedule::lockstep;
  c.seed = o.seed;
  c.coarse_delay_scale = o.coarse_delay_scale;
  c.repetitions = o.reps;
  c.csv_path = o.csv;
  c.trace_path = o.trace;
  c.allow_nonconverged = o.allow_nonconverged;
  return c;
}

} // namespace

std::array<Index, 3> parse_triple(const std::string &text) {
  std::array<Index, 3> out{};
  std::string_view rest(text);
  for (int axis = 0; axis < 3; ++axis) {
    const auto pos = axis < 2 ? rest.find('x') : std::string_view::npos;
    if (axis < 2 && pos == std::string_view::npos) {
      throw ConfigError("expected NXxNYxNZ, got '" + text + "'");
    }
    const auto field = rest.substr(0, pos);
    Index v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || v < 1) {
      throw ConfigError("expected positive NXxNYxNZ, got '" + text + "'");
    }
    out[axis] = v;
    if (axis < 2) rest.remove_prefix(pos + 1);
  }
  return out;
}

Command parse_cli(const std::vector<std::string> &args) {
  CLI::App app{"Asynchronous restricted additive Schwarz experiments", "ras"};
  app.require_subcommand(1);

  RawOptions run_opts;
  run_opts.variant = "sync-1l";
  run_opts.proc = "2x2x2";
  auto *run = app.add_subcommand("run", "Run one configuration");
  run->add_option("--variant", run_opts.variant,
                  "sync-1l | async-1l | sync-2l | async-2l-basic | async-2l-accurate")
      ->capture_default_str();
  run->add_option("--grid", run_opts.grid, "Interior nodes NXxNYxNZ")->capture_default_str();
  run->add_option("--proc", run_opts.proc, "Process grid PXxPYxPZ")->capture_default_str();
  add_common(*run, run_opts);

  RawOptions sweep_opts;
  sweep_opts.variant = "sync-1l,sync-2l";
  sweep_opts.proc = "2x2x2,3x3x3,4x4x4";
  auto *sweep = app.add_subcommand("sweep", "Weak-scaling sweep over process grids");
  sweep->add_option("--variant", sweep_opts.variant, "Comma-separated variants")
      ->capture_default_str();
  sweep->add_option("--proc", sweep_opts.proc, "Comma-separated process grids")
      ->capture_default_str();
  sweep->add_option("--local", sweep_opts.local, "Nodes per subdomain NXxNYxNZ")
      ->capture_default_str();
  add_common(*sweep, sweep_opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  Command cmd;
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    cmd.help_text = app.help();
    return cmd;
  } catch (const CLI::CallForAllHelp &) {
    cmd.help_text = app.help("", CLI::AppFormatMode::All);
    return cmd;
  } catch (const CLI::ParseError &e) {
    throw ConfigError(std::string(e.what()) + "\nRun with --help for usage.");
  }

  if (run->parsed()) {
    cmd.kind = Command::Kind::run;
    cmd.config = to_config(run_opts);
    cmd.config.variant = parse_variant(run_opts.variant);
    const auto g = parse_triple(run_opts.grid);
    cmd.config.grid = GridSpec{g[0], g[1], g[2]};
    cmd.config.procs = to_procs(run_opts.proc);
    cmd.config.validate();
  } else {
    cmd.kind = Command::Kind::sweep;
    cmd.config = to_config(sweep_opts);
    for (const auto &v : split_list(sweep_opts.variant)) {
      cmd.variants.push_back(parse_variant(v));
    }
    for (const auto &p : split_list(sweep_opts.proc)) cmd.proc_grids.push_back(to_procs(p));
    if (cmd.variants.empty() || cmd.proc_grids.empty()) {
      throw ConfigError("sweep needs at least one variant and one process grid");
    }
    cmd.local = parse_triple(sweep_opts.local);
    for (const auto &procs : cmd.proc_grids) {
      for (const auto v : cmd.variants) {
        auto c = cmd.config;
        c.variant = v;
        c.procs = procs;
        c.grid = scaled_grid(cmd.local, procs);
        c.validate();
      }
    }
  }
  return cmd;
}

std::string describe(const ExperimentConfig &c) {
  std::ostringstream os;
  os << "variant=" << to_string(c.variant) << " grid=" << c.grid.nx << 'x' << c.grid.ny
     << 'x' << c.grid.nz << " proc=" << c.procs.px << 'x' << c.procs.py << 'x'
     << c.procs.pz << " overlap=" << c.overlap << " eps=" << c.eps
     << " kmax=" << c.k_max << " max-corr=" << c.max_corr << " i0=" << c.i0
     << " coarse-rank-mode=" << to_string(c.root_mode)
     << " delay=" << c.delay.to_string()
     << " coarse-delay-scale=" << c.coarse_delay_scale
     << " schedule=" << (c.schedule == Schedule::lockstep ? "lockstep" : "free")
     << " seed=" << c.seed << " reps=" << c.repetitions;
  return os.str();
}

ExitCode execute(const Command &cmd, std::ostream &out, std::ostream &err) {
  if (cmd.kind == Command::Kind::help) {
    out << cmd.help_text;
    return ExitCode::ok;
  }
  ExperimentResult result;
  if (cmd.kind == Command::Kind::run) {
    err << "# " << describe(cmd.config) << '\n';
    result = run_experiment(cmd.config);
  } else {
    err << "# sweep local=" << cmd.local[0] << 'x' << cmd.local[1] << 'x' << cmd.local[2]
        << ' ' << describe(cmd.config) << '\n';
    result = weak_scaling_sweep(cmd.config, cmd.variants, cmd.proc_grids, cmd.local);
  }

  for (const auto &rep : result.reports) {
    std::uint64_t kmin = UINT64_MAX, kmax = 0;
    for (const auto &r : rep.ranks) {
      kmin = std::min(kmin, r.k_local);
      kmax = std::max(kmax, r.k_local);
    }
    err << "# " << to_string(rep.variant) << " p=" << rep.ranks.size()
        << " exit=" << to_string(rep.exit) << " k_local=[" << kmin << ',' << kmax
        << "] final_relres=" << rep.final_relres
        << (rep.converged ? " converged" : " NOT converged") << '\n';
  }

  if (cmd.config.csv_path.empty()) {
    write_csv(out, result.rows);
  } else {
    emit_csv(result.rows, cmd.config.csv_path);
  }
  if (!cmd.config.trace_path.empty() && !result.reports.empty()) {
    emit_trace(result.reports.front().diagnostics.trace, cmd.config.trace_path);
  }
  if (!result.all_converged && !cmd.config.allow_nonconverged) {
    return ExitCode::not_converged;
  }
  return ExitCode::ok;
}

int main_entry(const std::vector<std::string> &args, std::ostream &out,
               std::ostream &err) {
  try {
    return static_cast<int>(execute(parse_cli(args), out, err));
  } catch (const ConfigError &e) {
    err << "ras: configuration error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config);
  } catch (const IoError &e) {
    err << "ras: I/O error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::io);
  } catch (const std::exception &e) {
    err << "ras: error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::not_converged);
  }
}

} // namespace ras::cli
