#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ras/cholesky.hpp"
#include "ras/sparse.hpp"

namespace ras {

/// Source term of the Poisson model problem.
inline constexpr double kDefaultSource = 4590.0;

/// Interior node counts of the unit-cube grid. The mesh step is uniform,
/// h = 1 / (max(nx, ny, nz) + 1); on cubic grids this is 1/(n+1) per axis.
struct GridSpec {
  Index nx = 1;
  Index ny = 1;
  Index nz = 1;
  double g = kDefaultSource;

  double h() const;
  Index size() const { return nx * ny * nz; }
  Index node(Index x, Index y, Index z) const { return x + nx * (y + ny * z); }
  std::array<Index, 3> coords(Index node) const;
  void validate() const;
};

struct ProcGrid {
  int px = 1;
  int py = 1;
  int pz = 1;

  int count() const { return px * py * pz; }
  int rank(int ix, int iy, int iz) const { return ix + px * (iy + py * iz); }
};

/// Half-open box [lo, hi) of node coordinates.
struct Box {
  std::array<Index, 3> lo{};
  std::array<Index, 3> hi{};

  Index extent(int axis) const { return hi[axis] - lo[axis]; }
  Index volume() const { return extent(0) * extent(1) * extent(2); }
  bool contains(const std::array<Index, 3> &c) const {
    return c[0] >= lo[0] && c[0] < hi[0] && c[1] >= lo[1] && c[1] < hi[1] &&
           c[2] >= lo[2] && c[2] < hi[2];
  }
};

/// Global node lists exchanged between a subdomain and one neighbor.
/// `recv` are the nodes of this subdomain's extended set (box plus ghost
/// layer) owned by the neighbor; `send` are this subdomain's owned nodes in
/// the neighbor's extended set. Both sorted by global index.
struct HaloLink {
  int neighbor = -1;
  std::vector<Index> send;
  std::vector<Index> recv;
};

/// Overlapping box decomposition with Boolean ownership masks.
struct Decomposition {
  GridSpec grid;
  ProcGrid procs;
  int overlap = 0;

  std::vector<Box> owned_box;
  std::vector<Box> box;                      // owned box dilated by overlap
  std::vector<std::vector<Index>> indices;   // R_i: nodes of box, sorted
  std::vector<std::vector<Index>> owned;     // B_i support, sorted
  std::vector<std::vector<Index>> ghosts;    // stencil neighbours outside box
  std::vector<int> owner;                    // per global node
  std::vector<std::vector<int>> neighbors;   // N_i, sorted
  std::vector<std::vector<HaloLink>> halo;   // ordered like neighbors[i]

  int p() const { return static_cast<int>(indices.size()); }
};

/// Slots of one neighbor transfer, in subdomain-local numbering.
/// `send_slots` index the local vector; `recv_slots` index the extended
/// vector [local | ghost].
struct HaloSlots {
  int neighbor = -1;
  std::vector<Index> send_slots;
  std::vector<Index> recv_slots;
};

/// Everything one subdomain worker needs: A_i, the coupling block
/// C_i = R_i A R_{~i}^T restricted to the ghost columns, b_i and the
/// exchange layout.
struct SubdomainProblem {
  int id = 0;
  CsrMatrix a_local;   // n_local x n_local
  CsrMatrix coupling;  // n_local x n_ghost
  Vector b;
  SpdFactor factor;    // Cholesky of a_local
  std::vector<Index> global_of_local;
  std::vector<Index> global_of_ghost;
  std::vector<std::uint8_t> owned_mask;
  std::vector<Index> owned_slots;
  std::vector<HaloSlots> halo_layout;

  Index n_local() const { return a_local.n_rows(); }
  Index n_ghost() const { return coupling.n_cols(); }
};

/// Aggregation coarse space: one coarse unknown per subdomain.
struct CoarseOperator {
  int p = 0;
  CsrMatrix a0;
  SpdFactor a0_factor;
  std::vector<std::vector<Index>> restrict_slots; // owned local slots per i
  std::vector<std::vector<int>> prolong_map;      // owner per local slot
};

/// 7-point Laplacian (diagonal 6/h^2, neighbours -1/h^2) with homogeneous
/// Dirichlet boundary eliminated; b = g h^2 at every interior node.
struct PoissonSystem {
  CsrMatrix a;
  Vector b;
};
PoissonSystem assemble_poisson(const GridSpec &grid);

Decomposition build_decomposition(const GridSpec &grid, ProcGrid procs,
                                  int overlap);

SubdomainProblem extract_subdomain(const CsrMatrix &a, const Vector &b,
                                   const Decomposition &dec, int i);

CoarseOperator build_coarse(const CsrMatrix &a, const Decomposition &dec);

/// True iff sum_i R_i^T B_i R_i = I: every node owned exactly once, by a
/// subdomain whose index set contains it, consistently with `owner`.
bool verify_partition_of_unity(const Decomposition &dec);

/// Global system plus all per-subdomain pieces, immutable once built.
struct ProblemSet {
  GridSpec grid;
  CsrMatrix a;
  Vector b;
  double norm_b = 0.0;
  Decomposition dec;
  std::vector<SubdomainProblem> subs;

  int p() const { return dec.p(); }
};

ProblemSet make_problem(const GridSpec &grid, ProcGrid procs, int overlap);

} // namespace ras
