#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracle/dense.hpp"
#include "ras/error.hpp"
#include "ras/problem.hpp"
#include "support/generators.hpp"

using namespace ras;

namespace {

oracle::Grid og(const GridSpec &g) {
  return {static_cast<int>(g.nx), static_cast<int>(g.ny), static_cast<int>(g.nz), g.g};
}

std::vector<Index> to_index(const std::vector<int> &v) { return {v.begin(), v.end()}; }

} // namespace

TEST(Poisson, SingleNode) {
  const auto sys = assemble_poisson(GridSpec{1, 1, 1});
  ASSERT_EQ(sys.a.n_rows(), 1);
  EXPECT_DOUBLE_EQ(sys.a.at(0, 0), 24.0);
  EXPECT_DOUBLE_EQ(sys.b[0], 1147.5);
}

TEST(Poisson, TwoNodeChain) {
  const auto sys = assemble_poisson(GridSpec{2, 1, 1});
  EXPECT_NEAR(sys.a.at(0, 0), 54.0, 1e-12);
  EXPECT_NEAR(sys.a.at(0, 1), -9.0, 1e-12);
  EXPECT_NEAR(sys.a.at(1, 0), -9.0, 1e-12);
  EXPECT_NEAR(sys.a.at(1, 1), 54.0, 1e-12);
  EXPECT_NEAR(sys.b[0], 510.0, 1e-10);
  EXPECT_NEAR(sys.b[1], 510.0, 1e-10);
}

TEST(Poisson, InvalidGrid) {
  EXPECT_THROW(assemble_poisson(GridSpec{0, 1, 1}), ConfigError);
}

TEST(PoissonProperty, MatchesStencilOracle) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const GridSpec g{rng.uniform_int(1, 6), rng.uniform_int(1, 6), rng.uniform_int(1, 6)};
    const auto sys = assemble_poisson(g);
    EXPECT_TRUE(sys.a.is_symmetric());
    const auto d = oracle::poisson(og(g));
    const auto b = oracle::rhs(og(g));
    for (int i = 0; i < d.rows; ++i) {
      EXPECT_EQ(sys.b[i], b[i]);
      for (int j = 0; j < d.cols; ++j) ASSERT_EQ(sys.a.at(i, j), d(i, j));
    }
  }
}

TEST(Decomposition, SingleSubdomain) {
  const auto dec = build_decomposition(GridSpec{3, 2, 2}, {1, 1, 1}, 2);
  ASSERT_EQ(dec.p(), 1);
  EXPECT_EQ(dec.indices[0].size(), 12u);
  EXPECT_TRUE(std::all_of(dec.owner.begin(), dec.owner.end(), [](int o) { return o == 0; }));
  EXPECT_TRUE(dec.neighbors[0].empty());
  EXPECT_TRUE(dec.ghosts[0].empty());
}

TEST(Decomposition, FourNodeChain) {
  const auto dec = build_decomposition(GridSpec{4, 1, 1}, {2, 1, 1}, 1);
  EXPECT_EQ(dec.indices[0], (std::vector<Index>{0, 1, 2}));
  EXPECT_EQ(dec.indices[1], (std::vector<Index>{1, 2, 3}));
  EXPECT_EQ(dec.owned[0], (std::vector<Index>{0, 1}));
  EXPECT_EQ(dec.owned[1], (std::vector<Index>{2, 3}));
  EXPECT_EQ(dec.neighbors[0], (std::vector<int>{1}));
  EXPECT_EQ(dec.neighbors[1], (std::vector<int>{0}));
}

TEST(Decomposition, RemainderGoesToLowSlabs) {
  const auto dec = build_decomposition(GridSpec{7, 1, 1}, {3, 1, 1}, 0);
  EXPECT_EQ(dec.owned[0].size(), 3u);
  EXPECT_EQ(dec.owned[1].size(), 2u);
  EXPECT_EQ(dec.owned[2].size(), 2u);
}

TEST(Decomposition, Infeasible) {
  EXPECT_THROW(build_decomposition(GridSpec{2, 2, 2}, {3, 1, 1}, 1), ConfigError);
  EXPECT_THROW(build_decomposition(GridSpec{2, 2, 2}, {0, 1, 1}, 1), ConfigError);
  EXPECT_THROW(build_decomposition(GridSpec{2, 2, 2}, {1, 1, 1}, -1), ConfigError);
}

TEST(Decomposition, CorruptedOwnershipDetected) {
  const auto good = build_decomposition(GridSpec{4, 4, 1}, {2, 2, 1}, 1);
  ASSERT_TRUE(verify_partition_of_unity(good));

  auto twice = good;  // node 0 also claimed by subdomain 1
  twice.owned[1].insert(twice.owned[1].begin(), 0);
  EXPECT_FALSE(verify_partition_of_unity(twice));

  auto unowned = good;
  unowned.owned[0].erase(unowned.owned[0].begin());
  EXPECT_FALSE(verify_partition_of_unity(unowned));

  auto outside = good;  // owner whose index set misses the node
  const Index far = outside.owned[3].back();
  outside.indices[3].erase(std::find(outside.indices[3].begin(), outside.indices[3].end(), far));
  EXPECT_FALSE(verify_partition_of_unity(outside));
}

// Property: index sets and owners agree with the enumeration oracle, and
// the neighbor/halo invariants hold.
TEST(DecompositionProperty, MatchesOracleAndInvariants) {
  gen::Rng rng(2025);
  for (int trial = 0; trial < 150; ++trial) {
    const auto c = gen::decomposition(rng);
    const auto dec = build_decomposition(c.grid, c.procs, c.overlap);
    const auto ref = oracle::split(og(c.grid), c.procs.px, c.procs.py, c.procs.pz, c.overlap);
    ASSERT_EQ(dec.p(), ref.p);
    EXPECT_TRUE(verify_partition_of_unity(dec));
    EXPECT_EQ(dec.owner, ref.owner);
    const auto sys = assemble_poisson(c.grid);
    for (int i = 0; i < dec.p(); ++i) {
      EXPECT_EQ(dec.indices[i], to_index(ref.indices[i]));
      // ghosts: stencil neighbours of indices[i] outside it
      std::set<Index> in(dec.indices[i].begin(), dec.indices[i].end()), gh;
      for (Index g : dec.indices[i])
        for (Index col : sys.a.row_cols(g))
          if (!in.count(col)) gh.insert(col);
      EXPECT_EQ(dec.ghosts[i], std::vector<Index>(gh.begin(), gh.end()));
      // halo lists
      std::set<Index> ext = in;
      ext.insert(gh.begin(), gh.end());
      std::vector<int> nbrs;
      for (int j = 0; j < dec.p(); ++j) {
        if (j == i) continue;
        std::vector<Index> recv;
        for (Index g : ext)
          if (dec.owner[g] == j) recv.push_back(g);
        if (!recv.empty()) nbrs.push_back(j);
      }
      // symmetric closure
      for (int j = 0; j < dec.p(); ++j) {
        if (j == i || std::find(nbrs.begin(), nbrs.end(), j) != nbrs.end()) continue;
        const auto &nj = dec.neighbors[j];
        if (std::find(nj.begin(), nj.end(), i) != nj.end()) nbrs.push_back(j);
      }
      std::sort(nbrs.begin(), nbrs.end());
      EXPECT_EQ(dec.neighbors[i], nbrs);
      ASSERT_EQ(dec.halo[i].size(), dec.neighbors[i].size());
      for (const auto &link : dec.halo[i]) {
        for (Index g : link.recv) {
          EXPECT_EQ(dec.owner[g], link.neighbor);
          EXPECT_TRUE(ext.count(g));
        }
        const auto &back = dec.halo[link.neighbor];
        const auto it = std::find_if(back.begin(), back.end(),
                                     [&](const HaloLink &l) { return l.neighbor == i; });
        ASSERT_NE(it, back.end());
        EXPECT_EQ(link.send, it->recv);
        EXPECT_EQ(link.recv, it->send);
      }
    }
  }
}

TEST(Decomposition, PartitionOfUnityMatrix) {
  for (const ProcGrid procs : {ProcGrid{1, 1, 1}, ProcGrid{2, 1, 1}, ProcGrid{2, 2, 2}, ProcGrid{3, 3, 3}}) {
    for (int overlap : {1, 2, 3}) {
      const auto dec = build_decomposition(GridSpec{6, 6, 6}, procs, overlap);
      EXPECT_TRUE(verify_partition_of_unity(dec));
    }
  }
}

TEST(Subdomain, SingleSubdomainIsWholeSystem) {
  const GridSpec g{3, 3, 2};
  const auto sys = assemble_poisson(g);
  const auto dec = build_decomposition(g, {1, 1, 1}, 2);
  const auto sub = extract_subdomain(sys.a, sys.b, dec, 0);
  EXPECT_EQ(sub.a_local.values(), sys.a.values());
  EXPECT_EQ(sub.a_local.col_idx(), sys.a.col_idx());
  EXPECT_EQ(sub.coupling.nnz(), 0);
  EXPECT_EQ(sub.n_ghost(), 0);
  EXPECT_EQ(sub.b, sys.b);
}

TEST(Subdomain, FourNodeChainAgainstDenseExtraction) {
  const GridSpec g{4, 1, 1};
  const auto sys = assemble_poisson(g);
  const auto dec = build_decomposition(g, {2, 1, 1}, 1);
  const auto sub = extract_subdomain(sys.a, sys.b, dec, 0);
  const auto a = oracle::poisson(og(g));
  const auto split = oracle::split(og(g), 2, 1, 1, 1);
  const auto r = oracle::restriction(split, 0, 4);
  const auto ai = oracle::mul(oracle::mul(r, a), oracle::transpose(r));
  ASSERT_EQ(sub.n_local(), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(sub.a_local.at(i, j), ai(i, j));
  // single coupling entry: local node 2 to global node 3
  ASSERT_EQ(sub.n_ghost(), 1);
  EXPECT_EQ(sub.global_of_ghost[0], 3);
  EXPECT_EQ(sub.coupling.nnz(), 1);
  EXPECT_EQ(sub.coupling.at(2, 0), -1.0 / (g.h() * g.h()));
}

TEST(Subdomain, OutOfRange) {
  const GridSpec g{4, 1, 1};
  const auto sys = assemble_poisson(g);
  const auto dec = build_decomposition(g, {2, 1, 1}, 1);
  EXPECT_THROW(extract_subdomain(sys.a, sys.b, dec, 2), ContractViolation);
  EXPECT_THROW(extract_subdomain(sys.a, sys.b, dec, -1), ContractViolation);
}

// Property: A_i x_i + C_i x_ghost reproduces (A x) on every local row.
TEST(SubdomainProperty, LocalOperatorsReproduceGlobalRows) {
  gen::Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto c = gen::decomposition(rng);
    const auto ps = make_problem(c.grid, c.procs, c.overlap);
    const auto x = rng.vector(static_cast<std::size_t>(c.grid.size()));
    const auto ax = spmv(ps.a, x);
    for (const auto &sub : ps.subs) {
      EXPECT_TRUE(sub.a_local.is_symmetric());
      Vector xl, xg;
      for (Index g : sub.global_of_local) xl.push_back(x[g]);
      for (Index g : sub.global_of_ghost) xg.push_back(x[g]);
      auto y = spmv(sub.a_local, xl);
      spmv_add(sub.coupling, xg, 1.0, y);
      for (std::size_t l = 0; l < y.size(); ++l) {
        const double want = ax[sub.global_of_local[l]];
        EXPECT_LE(std::abs(y[l] - want), 1e-13 * std::max(1.0, std::abs(want)));
        EXPECT_EQ(sub.b[l], ps.b[sub.global_of_local[l]]);
        EXPECT_EQ(sub.owned_mask[l] != 0, ps.dec.owner[sub.global_of_local[l]] == sub.id);
      }
      // row-sum identity
      auto ones = spmv(sub.a_local, Vector(static_cast<std::size_t>(sub.n_local()), 1.0));
      spmv_add(sub.coupling, Vector(static_cast<std::size_t>(sub.n_ghost()), 1.0), 1.0, ones);
      const auto full = spmv(ps.a, Vector(static_cast<std::size_t>(c.grid.size()), 1.0));
      for (std::size_t l = 0; l < ones.size(); ++l) {
        EXPECT_NEAR(ones[l], full[sub.global_of_local[l]], 1e-9 * std::abs(sub.a_local.at(0, 0)));
      }
      // receive slots cover exactly the ghost columns plus owned-elsewhere local slots
      std::set<Index> recv_ghost;
      for (const auto &hs : sub.halo_layout)
        for (Index s : hs.recv_slots)
          if (s >= sub.n_local()) recv_ghost.insert(s - sub.n_local());
      EXPECT_EQ(recv_ghost.size(), static_cast<std::size_t>(sub.n_ghost()));
    }
  }
}

TEST(Coarse, SingleSubdomainSumsEntries) {
  const GridSpec g{2, 1, 1};
  const auto sys = assemble_poisson(g);
  const auto co = build_coarse(sys.a, build_decomposition(g, {1, 1, 1}, 0));
  ASSERT_EQ(co.p, 1);
  EXPECT_NEAR(co.a0.at(0, 0), 90.0, 1e-12);
}

TEST(Coarse, FourNodeChainGalerkin) {
  const GridSpec g{4, 1, 1};
  const auto sys = assemble_poisson(g);
  const auto dec = build_decomposition(g, {2, 1, 1}, 1);
  const auto co = build_coarse(sys.a, dec);
  oracle::Dense r0(2, 4);
  r0(0, 0) = r0(0, 1) = r0(1, 2) = r0(1, 3) = 1.0;
  const auto a0 = oracle::mul(oracle::mul(r0, oracle::poisson(og(g))), oracle::transpose(r0));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_EQ(co.a0.at(i, j), a0(i, j));
}

TEST(Coarse, ProlongationFollowsOwnership) {
  const auto ps = make_problem(GridSpec{6, 5, 4}, {2, 2, 1}, 2);
  const auto co = build_coarse(ps.a, ps.dec);
  for (const auto &sub : ps.subs) {
    const auto &map = co.prolong_map[sub.id];
    ASSERT_EQ(map.size(), static_cast<std::size_t>(sub.n_local()));
    for (std::size_t l = 0; l < map.size(); ++l) {
      EXPECT_EQ(map[l], ps.dec.owner[sub.global_of_local[l]]);
    }
    EXPECT_EQ(co.restrict_slots[sub.id], sub.owned_slots);
  }
}

TEST(CoarseProperty, MatchesDenseGalerkinExactly) {
  for (const GridSpec g : {GridSpec{4, 4, 4}, GridSpec{6, 6, 6}, GridSpec{8, 8, 8}, GridSpec{5, 7, 3}}) {
    for (const ProcGrid procs : {ProcGrid{2, 1, 1}, ProcGrid{2, 2, 2}, ProcGrid{3, 3, 3}}) {
      if (procs.px > g.nx || procs.py > g.ny || procs.pz > g.nz) continue;
      const auto sys = assemble_poisson(g);
      const auto dec = build_decomposition(g, procs, 2);
      const auto co = build_coarse(sys.a, dec);
      const auto split = oracle::split(og(g), procs.px, procs.py, procs.pz, 2);
      const auto r0 = oracle::coarse_restriction(split, static_cast<int>(g.size()));
      const auto a0 = oracle::mul(oracle::mul(r0, oracle::poisson(og(g))), oracle::transpose(r0));
      EXPECT_TRUE(co.a0.is_symmetric());
      for (int i = 0; i < co.p; ++i)
        for (int j = 0; j < co.p; ++j) ASSERT_EQ(co.a0.at(i, j), a0(i, j));
    }
  }
}
