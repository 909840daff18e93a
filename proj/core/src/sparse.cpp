#include "ras/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ras/error.hpp"

namespace ras {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char *op) {
  if (a != b) {
    throw ContractViolation(std::string(op) + ": length mismatch (" +
                            std::to_string(a) + " vs " + std::to_string(b) +
                            ")");
  }
}

} // namespace

CsrMatrix::CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> row_ptr,
                     std::vector<Index> col_idx, std::vector<double> values)
    : n_rows_(n_rows), n_cols_(n_cols), row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)), values_(std::move(values)) {
  validate();
}

void CsrMatrix::validate() const {
  if (n_rows_ < 0 || n_cols_ < 0) {
    throw ContractViolation("CsrMatrix: negative dimension");
  }
  if (row_ptr_.size() != static_cast<std::size_t>(n_rows_) + 1) {
    throw ContractViolation("CsrMatrix: row_ptr must have n_rows + 1 entries");
  }
  if (col_idx_.size() != values_.size()) {
    throw ContractViolation("CsrMatrix: col_idx and values differ in length");
  }
  if (row_ptr_.front() != 0 ||
      row_ptr_.back() != static_cast<Index>(col_idx_.size())) {
    throw ContractViolation("CsrMatrix: row_ptr must span [0, nnz]");
  }
  for (Index i = 0; i < n_rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) {
      throw ContractViolation("CsrMatrix: row_ptr decreasing at row " +
                              std::to_string(i));
    }
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const Index c = col_idx_[k];
      if (c < 0 || c >= n_cols_) {
        throw ContractViolation("CsrMatrix: column out of range in row " +
                                std::to_string(i));
      }
      if (k > row_ptr_[i] && col_idx_[k - 1] >= c) {
        throw ContractViolation(
            "CsrMatrix: columns not strictly increasing in row " +
            std::to_string(i));
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(Index n_rows, Index n_cols,
                                   std::vector<Triplet> triplets) {
  for (const auto &t : triplets) {
    if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols) {
      throw ContractViolation("CsrMatrix::from_triplets: entry out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  std::vector<Index> row_ptr(static_cast<std::size_t>(n_rows) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto &t = triplets[k];
    if (!cols.empty() && k > 0 && triplets[k - 1].row == t.row &&
        triplets[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++row_ptr[static_cast<std::size_t>(t.row) + 1];
  }
  for (Index i = 0; i < n_rows; ++i) {
    row_ptr[i + 1] += row_ptr[i];
  }
  return CsrMatrix(n_rows, n_cols, std::move(row_ptr), std::move(cols),
                   std::move(vals));
}

CsrMatrix CsrMatrix::identity(Index n) {
  std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1);
  std::vector<Index> cols(static_cast<std::size_t>(n));
  for (Index i = 0; i <= n; ++i) row_ptr[i] = i;
  for (Index i = 0; i < n; ++i) cols[i] = i;
  return CsrMatrix(n, n, std::move(row_ptr), std::move(cols),
                   std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

std::span<const Index> CsrMatrix::row_cols(Index row) const {
  return std::span<const Index>(col_idx_).subspan(
      row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]);
}

std::span<const double> CsrMatrix::row_values(Index row) const {
  return std::span<const double>(values_).subspan(
      row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]);
}

double CsrMatrix::at(Index row, Index col) const {
  if (row < 0 || row >= n_rows_ || col < 0 || col >= n_cols_) {
    throw ContractViolation("CsrMatrix::at: index out of range");
  }
  const auto cols = row_cols(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return row_values(row)[static_cast<std::size_t>(it - cols.begin())];
}

bool CsrMatrix::is_symmetric() const {
  if (n_rows_ != n_cols_) return false;
  for (Index i = 0; i < n_rows_; ++i) {
    const auto cols = row_cols(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (at(cols[k], i) != vals[k]) return false;
    }
  }
  return true;
}

Vector spmv(const CsrMatrix &a, std::span<const double> v) {
  if (static_cast<Index>(v.size()) != a.n_cols()) {
    throw ContractViolation("spmv: matrix has " + std::to_string(a.n_cols()) +
                            " columns but vector has " +
                            std::to_string(v.size()) + " entries");
  }
  Vector out(static_cast<std::size_t>(a.n_rows()), 0.0);
  spmv_add(a, v, 1.0, out);
  return out;
}

void spmv_add(const CsrMatrix &a, std::span<const double> v, double alpha,
              std::span<double> y) {
  if (static_cast<Index>(v.size()) != a.n_cols() ||
      static_cast<Index>(y.size()) != a.n_rows()) {
    throw ContractViolation("spmv_add: dimension mismatch");
  }
  const auto &rp = a.row_ptr();
  const auto &ci = a.col_idx();
  const auto &va = a.values();
  for (Index i = 0; i < a.n_rows(); ++i) {
    double sum = 0.0;
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      sum += va[k] * v[ci[k]];
    }
    y[i] += alpha * sum;
  }
}

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_length(u.size(), v.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

Vector axpy(double alpha, std::span<const double> u,
            std::span<const double> v) {
  require_same_length(u.size(), v.size(), "axpy");
  Vector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = alpha * u[i] + v[i];
  return out;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

} // namespace ras
