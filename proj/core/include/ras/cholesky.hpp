#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ras/sparse.hpp"

namespace ras {

/// Envelope (skyline) Cholesky factor L with A = L L^T.
///
/// Row i of L is stored densely from its first structural nonzero column
/// first_col(i) through the diagonal. No fill-reducing ordering is applied:
/// structured-grid subdomain matrices in natural order are banded, so the
/// envelope is exactly the band.
class SpdFactor {
public:
  SpdFactor() = default;

  Index n() const noexcept { return n_; }
  Index first_col(Index row) const { return first_[row]; }

  /// L(row, col); zero outside the envelope and above the diagonal.
  double lower(Index row, Index col) const;

  /// Number of stored entries (envelope size).
  std::size_t stored() const noexcept { return data_.size(); }

  friend SpdFactor spd_factor(const CsrMatrix &a);
  friend Vector spd_solve(const SpdFactor &f, std::span<const double> rhs);
  friend void spd_solve_in_place(const SpdFactor &f, std::span<double> x);

private:
  Index n_ = 0;
  std::vector<Index> first_;        // first stored column per row
  std::vector<std::size_t> offset_; // start of row i in data_, size n+1
  std::vector<double> data_;
};

/// Factors a symmetric positive definite matrix. Only the lower triangle
/// of `a` is read. Throws NotSpdError on a non-positive pivot.
SpdFactor spd_factor(const CsrMatrix &a);

Vector spd_solve(const SpdFactor &f, std::span<const double> rhs);

/// Overwrites `x` (holding the right-hand side) with the solution.
void spd_solve_in_place(const SpdFactor &f, std::span<double> x);

} // namespace ras
