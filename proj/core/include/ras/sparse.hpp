#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ras {

using Index = std::int64_t;
using Vector = std::vector<double>;

/// (row, col, value) entry used to assemble a CsrMatrix.
struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed-row sparse matrix.
///
/// Invariants (checked by every constructor): row_ptr has n_rows + 1
/// non-decreasing entries starting at 0 and ending at nnz; within each row
/// column indices are strictly increasing and lie in [0, n_cols).
class CsrMatrix {
public:
  CsrMatrix() : row_ptr_{0} {}

  /// Takes ownership of raw CSR arrays. Throws ContractViolation if the
  /// arrays violate the invariants.
  CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> row_ptr,
            std::vector<Index> col_idx, std::vector<double> values);

  /// Assembles from unordered triplets; duplicate (row, col) pairs are summed.
  static CsrMatrix from_triplets(Index n_rows, Index n_cols,
                                 std::vector<Triplet> triplets);

  static CsrMatrix identity(Index n);

  Index n_rows() const noexcept { return n_rows_; }
  Index n_cols() const noexcept { return n_cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  const std::vector<Index> &row_ptr() const noexcept { return row_ptr_; }
  const std::vector<Index> &col_idx() const noexcept { return col_idx_; }
  const std::vector<double> &values() const noexcept { return values_; }

  std::span<const Index> row_cols(Index row) const;
  std::span<const double> row_values(Index row) const;

  /// Entry lookup by binary search; returns 0 for structural zeros.
  double at(Index row, Index col) const;

  bool is_symmetric() const;

private:
  void validate() const;

  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

Vector spmv(const CsrMatrix &a, std::span<const double> v);

/// y := y + alpha * A v, accumulated row by row.
void spmv_add(const CsrMatrix &a, std::span<const double> v, double alpha,
              std::span<double> y);

double dot(std::span<const double> u, std::span<const double> v);

/// alpha * u + v
Vector axpy(double alpha, std::span<const double> u, std::span<const double> v);

double norm2(std::span<const double> v);

} // namespace ras
