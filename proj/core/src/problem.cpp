#include "ras/problem.hpp"

#include <algorithm>
#include <string>

#include "ras/error.hpp"

namespace ras {

namespace {

// Split n nodes into `parts` contiguous slabs; the first n % parts slabs
// get one extra node. Returns parts + 1 boundaries.
std::vector<Index> slab_bounds(Index n, int parts) {
  std::vector<Index> bounds(static_cast<std::size_t>(parts) + 1, 0);
  const Index base = n / parts;
  const Index rem = n % parts;
  for (int k = 0; k < parts; ++k) {
    bounds[k + 1] = bounds[k] + base + (k < rem ? 1 : 0);
  }
  return bounds;
}

template <class F> void for_each_node(const Box &b, F &&f) {
  for (Index z = b.lo[2]; z < b.hi[2]; ++z)
    for (Index y = b.lo[1]; y < b.hi[1]; ++y)
      for (Index x = b.lo[0]; x < b.hi[0]; ++x) f(x, y, z);
}

Index box_local(const Box &b, const std::array<Index, 3> &c) {
  return (c[0] - b.lo[0]) +
         b.extent(0) * ((c[1] - b.lo[1]) + b.extent(1) * (c[2] - b.lo[2]));
}

constexpr std::array<std::array<Index, 3>, 6> kFaceOffsets{{
    {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

} // namespace

double GridSpec::h() const {
  return 1.0 / static_cast<double>(std::max({nx, ny, nz}) + 1);
}

std::array<Index, 3> GridSpec::coords(Index node) const {
  return {node % nx, (node / nx) % ny, node / (nx * ny)};
}

void GridSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) {
    throw ConfigError("grid must have at least one interior node per axis");
  }
}

PoissonSystem assemble_poisson(const GridSpec &grid) {
  grid.validate();
  const double h = grid.h();
  const double off = -1.0 / (h * h);
  const double diag = 6.0 / (h * h);
  const Index n = grid.size();

  std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(7 * n));
  vals.reserve(static_cast<std::size_t>(7 * n));

  // Row entries emitted in increasing global column order: z-, y-, x-,
  // diagonal, x+, y+, z+.
  for (Index z = 0; z < grid.nz; ++z) {
    for (Index y = 0; y < grid.ny; ++y) {
      for (Index x = 0; x < grid.nx; ++x) {
        const Index row = grid.node(x, y, z);
        auto emit = [&](Index col, double v) {
          cols.push_back(col);
          vals.push_back(v);
        };
        if (z > 0) emit(grid.node(x, y, z - 1), off);
        if (y > 0) emit(grid.node(x, y - 1, z), off);
        if (x > 0) emit(grid.node(x - 1, y, z), off);
        emit(row, diag);
        if (x + 1 < grid.nx) emit(grid.node(x + 1, y, z), off);
        if (y + 1 < grid.ny) emit(grid.node(x, y + 1, z), off);
        if (z + 1 < grid.nz) emit(grid.node(x, y, z + 1), off);
        row_ptr[row + 1] = static_cast<Index>(cols.size());
      }
    }
  }
  PoissonSystem sys{CsrMatrix(n, n, std::move(row_ptr), std::move(cols),
                              std::move(vals)),
                    Vector(static_cast<std::size_t>(n), grid.g * h * h)};
  return sys;
}

Decomposition build_decomposition(const GridSpec &grid, ProcGrid procs,
                                  int overlap) {
  grid.validate();
  if (procs.px < 1 || procs.py < 1 || procs.pz < 1) {
    throw ConfigError("process grid entries must be >= 1");
  }
  if (procs.px > grid.nx || procs.py > grid.ny || procs.pz > grid.nz) {
    throw ConfigError("process grid " + std::to_string(procs.px) + "x" +
                      std::to_string(procs.py) + "x" +
                      std::to_string(procs.pz) + " exceeds grid " +
                      std::to_string(grid.nx) + "x" + std::to_string(grid.ny) +
                      "x" + std::to_string(grid.nz));
  }
  if (overlap < 0) throw ConfigError("overlap must be >= 0");

  Decomposition dec;
  dec.grid = grid;
  dec.procs = procs;
  dec.overlap = overlap;

  const int p = procs.count();
  const std::array<Index, 3> extent{grid.nx, grid.ny, grid.nz};
  const std::array<std::vector<Index>, 3> bounds{slab_bounds(grid.nx, procs.px),
                                                 slab_bounds(grid.ny, procs.py),
                                                 slab_bounds(grid.nz, procs.pz)};

  dec.owned_box.resize(p);
  dec.box.resize(p);
  dec.indices.resize(p);
  dec.owned.resize(p);
  dec.ghosts.resize(p);
  dec.neighbors.resize(p);
  dec.halo.resize(p);
  dec.owner.assign(static_cast<std::size_t>(grid.size()), -1);

  for (int iz = 0; iz < procs.pz; ++iz) {
    for (int iy = 0; iy < procs.py; ++iy) {
      for (int ix = 0; ix < procs.px; ++ix) {
        const int i = procs.rank(ix, iy, iz);
        const std::array<int, 3> pos{ix, iy, iz};
        Box own, ext;
        for (int a = 0; a < 3; ++a) {
          own.lo[a] = bounds[a][pos[a]];
          own.hi[a] = bounds[a][pos[a] + 1];
          ext.lo[a] = std::max<Index>(0, own.lo[a] - overlap);
          ext.hi[a] = std::min<Index>(extent[a], own.hi[a] + overlap);
        }
        dec.owned_box[i] = own;
        dec.box[i] = ext;
      }
    }
  }

  for (int i = 0; i < p; ++i) {
    auto &idx = dec.indices[i];
    idx.reserve(static_cast<std::size_t>(dec.box[i].volume()));
    for_each_node(dec.box[i],
                  [&](Index x, Index y, Index z) { idx.push_back(grid.node(x, y, z)); });

    auto &own = dec.owned[i];
    for_each_node(dec.owned_box[i], [&](Index x, Index y, Index z) {
      const Index g = grid.node(x, y, z);
      own.push_back(g);
      dec.owner[g] = i;
    });

    auto &gh = dec.ghosts[i];
    const Box &b = dec.box[i];
    for_each_node(b, [&](Index x, Index y, Index z) {
      for (const auto &d : kFaceOffsets) {
        const std::array<Index, 3> c{x + d[0], y + d[1], z + d[2]};
        bool inside_grid = true;
        for (int a = 0; a < 3; ++a) {
          if (c[a] < 0 || c[a] >= extent[a]) inside_grid = false;
        }
        if (inside_grid && !b.contains(c)) gh.push_back(grid.node(c[0], c[1], c[2]));
      }
    });
    std::sort(gh.begin(), gh.end());
    gh.erase(std::unique(gh.begin(), gh.end()), gh.end());
  }

  // recv[i][j]: nodes of (indices[i] ∪ ghosts[i]) owned by j.
  std::vector<std::vector<std::vector<Index>>> recv(
      p, std::vector<std::vector<Index>>(p));
  for (int i = 0; i < p; ++i) {
    for (const auto *list : {&dec.indices[i], &dec.ghosts[i]}) {
      for (Index g : *list) {
        const int j = dec.owner[g];
        if (j != i) recv[i][j].push_back(g);
      }
    }
    for (auto &r : recv[i]) std::sort(r.begin(), r.end());
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (j == i || (recv[i][j].empty() && recv[j][i].empty())) continue;
      dec.neighbors[i].push_back(j);
      dec.halo[i].push_back(HaloLink{j, recv[j][i], recv[i][j]});
    }
  }
  return dec;
}

SubdomainProblem extract_subdomain(const CsrMatrix &a, const Vector &b,
                                   const Decomposition &dec, int i) {
  if (i < 0 || i >= dec.p()) {
    throw ContractViolation("extract_subdomain: subdomain id " +
                            std::to_string(i) + " out of range");
  }
  if (a.n_rows() != dec.grid.size() || a.n_cols() != dec.grid.size() ||
      static_cast<Index>(b.size()) != dec.grid.size()) {
    throw ContractViolation("extract_subdomain: system does not match grid");
  }

  SubdomainProblem sub;
  sub.id = i;
  const Box &box = dec.box[i];
  const auto &idx = dec.indices[i];
  const auto &ghosts = dec.ghosts[i];
  const Index n_local = static_cast<Index>(idx.size());
  const Index n_ghost = static_cast<Index>(ghosts.size());

  sub.global_of_local = idx;
  sub.global_of_ghost = ghosts;

  auto ghost_slot = [&](Index g) -> Index {
    const auto it = std::lower_bound(ghosts.begin(), ghosts.end(), g);
    if (it == ghosts.end() || *it != g) {
      throw ContractViolation("extract_subdomain: column " + std::to_string(g) +
                              " couples to subdomain " + std::to_string(i) +
                              " but is not in its ghost layer");
    }
    return static_cast<Index>(it - ghosts.begin());
  };

  std::vector<Index> a_ptr{0}, c_ptr{0};
  std::vector<Index> a_cols, c_cols;
  std::vector<double> a_vals, c_vals;
  sub.b.resize(static_cast<std::size_t>(n_local));
  sub.owned_mask.resize(static_cast<std::size_t>(n_local));

  for (Index l = 0; l < n_local; ++l) {
    const Index g = idx[l];
    sub.b[l] = b[g];
    sub.owned_mask[l] = dec.owner[g] == i ? 1 : 0;
    if (sub.owned_mask[l]) sub.owned_slots.push_back(l);

    // Global columns are sorted and both the local and ghost numberings are
    // monotone in the global index, so each row stays sorted.
    const auto cols = a.row_cols(g);
    const auto vals = a.row_values(g);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto c = dec.grid.coords(cols[k]);
      if (box.contains(c)) {
        a_cols.push_back(box_local(box, c));
        a_vals.push_back(vals[k]);
      } else {
        c_cols.push_back(ghost_slot(cols[k]));
        c_vals.push_back(vals[k]);
      }
    }
    a_ptr.push_back(static_cast<Index>(a_cols.size()));
    c_ptr.push_back(static_cast<Index>(c_cols.size()));
  }
  sub.a_local = CsrMatrix(n_local, n_local, std::move(a_ptr), std::move(a_cols),
                          std::move(a_vals));
  sub.coupling = CsrMatrix(n_local, n_ghost, std::move(c_ptr), std::move(c_cols),
                           std::move(c_vals));
  sub.factor = spd_factor(sub.a_local);

  auto extended_slot = [&](Index g) -> Index {
    const auto c = dec.grid.coords(g);
    if (box.contains(c)) return box_local(box, c);
    return n_local + ghost_slot(g);
  };
  for (const auto &link : dec.halo[i]) {
    HaloSlots slots;
    slots.neighbor = link.neighbor;
    for (Index g : link.send) slots.send_slots.push_back(box_local(box, dec.grid.coords(g)));
    for (Index g : link.recv) slots.recv_slots.push_back(extended_slot(g));
    sub.halo_layout.push_back(std::move(slots));
  }
  return sub;
}

CoarseOperator build_coarse(const CsrMatrix &a, const Decomposition &dec) {
  if (a.n_rows() != dec.grid.size()) {
    throw ContractViolation("build_coarse: matrix does not match grid");
  }
  const int p = dec.p();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index r = 0; r < a.n_rows(); ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      trip.push_back({dec.owner[r], dec.owner[cols[k]], vals[k]});
    }
  }

  CoarseOperator co;
  co.p = p;
  co.a0 = CsrMatrix::from_triplets(p, p, std::move(trip));
  co.a0_factor = spd_factor(co.a0);
  co.restrict_slots.resize(p);
  co.prolong_map.resize(p);
  for (int i = 0; i < p; ++i) {
    const auto &idx = dec.indices[i];
    auto &map = co.prolong_map[i];
    map.resize(idx.size());
    for (std::size_t l = 0; l < idx.size(); ++l) {
      map[l] = dec.owner[idx[l]];
      if (map[l] == i) co.restrict_slots[i].push_back(static_cast<Index>(l));
    }
  }
  return co;
}

bool verify_partition_of_unity(const Decomposition &dec) {
  const Index n = static_cast<Index>(dec.owner.size());
  std::vector<int> claims(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < dec.p(); ++i) {
    const auto &idx = dec.indices[i];
    for (Index g : dec.owned[i]) {
      if (g < 0 || g >= n) return false;
      if (!std::binary_search(idx.begin(), idx.end(), g)) return false;
      if (dec.owner[g] != i) return false;
      ++claims[g];
    }
  }
  return std::all_of(claims.begin(), claims.end(), [](int c) { return c == 1; });
}

ProblemSet make_problem(const GridSpec &grid, ProcGrid procs, int overlap) {
  ProblemSet ps;
  ps.grid = grid;
  auto sys = assemble_poisson(grid);
  ps.a = std::move(sys.a);
  ps.b = std::move(sys.b);
  ps.norm_b = norm2(ps.b);
  ps.dec = build_decomposition(grid, procs, overlap);
  ps.subs.reserve(static_cast<std::size_t>(ps.dec.p()));
  for (int i = 0; i < ps.dec.p(); ++i) {
    ps.subs.push_back(extract_subdomain(ps.a, ps.b, ps.dec, i));
  }
  return ps;
}

} // namespace ras
