#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ras/error.hpp"
#include "ras/harness.hpp"

using namespace ras;

namespace {

ExperimentConfig small(Variant v) {
  ExperimentConfig c;
  c.grid = {6, 6, 6};
  c.variant = v;
  return c;
}

std::vector<CsvRow> without_wall(std::vector<CsvRow> rows) {
  for (auto &r : rows) r.wall_ms = 0.0;
  return rows;
}

std::string csv_text(const std::vector<CsvRow> &rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

} // namespace

TEST(ExperimentConfig, Validation) {
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
  auto c = ExperimentConfig{};
  c.repetitions = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.grid = {2, 2, 2};
  c.procs = {3, 1, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.overlap = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.eps = -1e-6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.i0 = 8;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunExperiment, SyncRepetitionsIdentical) {
  auto c = small(Variant::sync_2l);
  c.repetitions = 3;
  const auto res = run_experiment(c);
  ASSERT_EQ(res.reports.size(), 3u);
  ASSERT_EQ(res.rows.size(), 24u);
  EXPECT_TRUE(res.all_converged);
  for (const auto &row : res.rows) {
    EXPECT_EQ(row.k_rounds, res.rows[0].k_rounds);
    EXPECT_EQ(row.seed, c.seed + row.run_id);
    EXPECT_LT(row.final_relres, 1e-6);
    EXPECT_TRUE(row.converged);
  }
}

TEST(RunExperiment, AsyncSeedsGiveRowGroups) {
  auto c = small(Variant::async_2l_accurate);
  c.delay = DelayModel::uniform(0, 10);
  c.repetitions = 3;
  const auto res = run_experiment(c, 10);
  ASSERT_EQ(res.rows.size(), 24u);
  std::set<std::uint64_t> ids, seeds;
  for (const auto &row : res.rows) {
    ids.insert(row.run_id);
    seeds.insert(row.seed);
    EXPECT_EQ(row.variant, "async-2l-accurate");
    EXPECT_EQ(row.p, 8);
    EXPECT_EQ(row.local_n, 27);
    if (row.converged) EXPECT_LT(row.final_relres, 1e-6);
  }
  EXPECT_EQ(ids, (std::set<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(seeds.size(), 3u);
  // one final_relres per run
  for (std::size_t i = 0; i < res.rows.size(); ++i)
    EXPECT_EQ(res.rows[i].final_relres, res.rows[i - i % 8].final_relres);
}

TEST(RunExperiment, NonConvergedReported) {
  auto c = small(Variant::sync_1l);
  c.k_max = 2;
  const auto res = run_experiment(c);
  EXPECT_FALSE(res.all_converged);
  for (const auto &row : res.rows) EXPECT_FALSE(row.converged);
}

TEST(RunExperiment, SameSeedSameCsvApartFromWallTime) {
  for (auto v : {Variant::sync_1l, Variant::async_1l, Variant::async_2l_basic}) {
    auto c = small(v);
    c.delay = DelayModel::uniform(0, 10);
    c.seed = 9;
    c.repetitions = 2;
    const auto a = run_experiment(c), b = run_experiment(c);
    EXPECT_EQ(csv_text(without_wall(a.rows)), csv_text(without_wall(b.rows))) << to_string(v);
  }
}

TEST(Sweep, ScaledGrid) {
  const std::array<Index, 3> local{10, 10, 10};
  for (int k : {2, 3, 4}) {
    const auto g = scaled_grid(local, {k, k, k});
    EXPECT_EQ(g.nx, 10 * k);
    EXPECT_EQ(g.ny, 10 * k);
    EXPECT_EQ(g.nz, 10 * k);
  }
  const auto g = scaled_grid({3, 4, 5}, {1, 2, 3});
  EXPECT_EQ(g.nx, 3);
  EXPECT_EQ(g.ny, 8);
  EXPECT_EQ(g.nz, 15);
}

TEST(Sweep, CartesianProductAndLocalSize) {
  ExperimentConfig base;
  const std::vector<Variant> variants{Variant::sync_1l, Variant::sync_2l};
  const std::vector<ProcGrid> grids{{1, 1, 1}, {2, 1, 1}, {2, 2, 1}};
  const auto res = weak_scaling_sweep(base, variants, grids, {4, 4, 4});
  ASSERT_EQ(res.reports.size(), 6u);
  std::set<std::pair<std::string, int>> seen;
  for (const auto &row : res.rows) {
    seen.insert({row.variant, row.p});
    EXPECT_EQ(row.local_n, 64);
  }
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_EQ(res.rows.size(), 2u * (1 + 2 + 4));
  // run ids continue across the sweep
  EXPECT_EQ(res.rows.front().run_id, 0u);
  EXPECT_EQ(res.rows.back().run_id, 5u);
  EXPECT_EQ(res.rows.front().variant, "sync-1l");
  EXPECT_EQ(res.rows.back().variant, "sync-2l");
}

TEST(Csv, HeaderAndFormat) {
  CsvRow r;
  r.run_id = 3;
  r.variant = "sync-2l";
  r.p = 8;
  r.px = r.py = r.pz = 2;
  r.local_n = 1000;
  r.overlap = 2;
  r.eps = 1e-6;
  r.seed = 4;
  r.rank = 7;
  r.k_rounds = 12;
  r.k_local = 12;
  r.coarse_solves = 12;
  r.corrections = 12;
  r.wall_ms = 1.5;
  r.final_relres = 2.5e-7;
  r.converged = true;
  EXPECT_EQ(csv_text({r}), std::string(kCsvHeader) + "\n" +
                               "3,sync-2l,8,2,2,2,1000,2,1e-06,4,7,12,12,12,12,1.5,2.5e-07,1\n");
  EXPECT_EQ(std::string(kCsvHeader),
            "run_id,variant,p,px,py,pz,local_n,overlap,eps,seed,rank,k_rounds,k_local,"
            "coarse_solves,corrections,wall_ms,final_relres,converged");
}

TEST(Csv, RoundTrip) {
  auto c = small(Variant::async_2l_basic);
  c.delay = DelayModel::uniform(0, 3);
  c.repetitions = 2;
  const auto rows = run_experiment(c).rows;
  std::istringstream is(csv_text(rows));
  EXPECT_EQ(read_csv(is), rows);
}

TEST(Csv, Errors) {
  EXPECT_THROW(emit_csv({}, "/tmp/never_written.csv"), ContractViolation);
  CsvRow r;
  r.variant = "sync-1l";
  EXPECT_THROW(emit_csv({r}, "/nonexistent-dir/out.csv"), IoError);
  std::istringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_csv(bad_header), ConfigError);
  std::istringstream short_row(std::string(kCsvHeader) + "\n1,2,3\n");
  EXPECT_THROW(read_csv(short_row), ConfigError);
  std::istringstream bad_number(std::string(kCsvHeader) +
                                "\nx,sync-1l,1,1,1,1,1,0,1e-06,1,0,1,1,0,0,0.1,0.5,1\n");
  EXPECT_THROW(read_csv(bad_number), ConfigError);
}

TEST(Csv, EmitToFile) {
  const auto path = (std::filesystem::temp_directory_path() / "ras_harness_test.csv").string();
  const auto rows = run_experiment(small(Variant::sync_1l)).rows;
  emit_csv(rows, path);
  std::ifstream in(path);
  EXPECT_EQ(read_csv(in), rows);
  std::filesystem::remove(path);
}

TEST(Trace, EmitsLines) {
  const auto path = (std::filesystem::temp_directory_path() / "ras_harness_trace.txt").string();
  emit_trace({{4, 0, 1, 1, 0}, {5, 1, 0, 1, 0}}, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "4,0,1,1,0\n5,1,0,1,0\n");
  std::filesystem::remove(path);
  EXPECT_THROW(emit_trace({}, "/nonexistent-dir/t.txt"), IoError);
}
