#include "ras/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ras/error.hpp"

namespace ras {

double SpdFactor::lower(Index row, Index col) const {
  if (row < 0 || row >= n_ || col < 0 || col >= n_) {
    throw ContractViolation("SpdFactor::lower: index out of range");
  }
  if (col > row || col < first_[row]) return 0.0;
  return data_[offset_[row] + static_cast<std::size_t>(col - first_[row])];
}

SpdFactor spd_factor(const CsrMatrix &a) {
  if (a.n_rows() != a.n_cols()) {
    throw ContractViolation("spd_factor: matrix is not square");
  }
  SpdFactor f;
  const Index n = a.n_rows();
  f.n_ = n;
  f.first_.resize(static_cast<std::size_t>(n));
  f.offset_.resize(static_cast<std::size_t>(n) + 1);

  f.offset_[0] = 0;
  for (Index i = 0; i < n; ++i) {
    const auto cols = a.row_cols(i);
    Index first = i;
    if (!cols.empty() && cols.front() < i) first = cols.front();
    f.first_[i] = first;
    f.offset_[i + 1] = f.offset_[i] + static_cast<std::size_t>(i - first + 1);
  }
  f.data_.assign(f.offset_[n], 0.0);

  // Scatter the lower triangle of A into the envelope.
  for (Index i = 0; i < n; ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size() && cols[k] <= i; ++k) {
      f.data_[f.offset_[i] + static_cast<std::size_t>(cols[k] - f.first_[i])] =
          vals[k];
    }
  }

  // Row-oriented (bordering) Cholesky; each inner product runs over the
  // overlap of two contiguous envelope rows.
  for (Index i = 0; i < n; ++i) {
    double *row_i = f.data_.data() + f.offset_[i];
    const Index fi = f.first_[i];
    for (Index j = fi; j < i; ++j) {
      const double *row_j = f.data_.data() + f.offset_[j];
      const Index fj = f.first_[j];
      const Index start = std::max(fi, fj);
      double sum = row_i[j - fi];
      for (Index k = start; k < j; ++k) {
        sum -= row_i[k - fi] * row_j[k - fj];
      }
      row_i[j - fi] = sum / row_j[j - fj];
    }
    double diag = row_i[i - fi];
    for (Index k = fi; k < i; ++k) diag -= row_i[k - fi] * row_i[k - fi];
    if (!(diag > 0.0)) {
      throw NotSpdError(static_cast<std::size_t>(i), diag);
    }
    row_i[i - fi] = std::sqrt(diag);
  }
  return f;
}

void spd_solve_in_place(const SpdFactor &f, std::span<double> x) {
  if (static_cast<Index>(x.size()) != f.n_) {
    throw ContractViolation("spd_solve: factor has order " +
                            std::to_string(f.n_) + " but rhs has " +
                            std::to_string(x.size()) + " entries");
  }
  const Index n = f.n_;
  // L y = b
  for (Index i = 0; i < n; ++i) {
    const double *row = f.data_.data() + f.offset_[i];
    const Index fi = f.first_[i];
    double sum = x[i];
    for (Index k = fi; k < i; ++k) sum -= row[k - fi] * x[k];
    x[i] = sum / row[i - fi];
  }
  // L^T x = y, sweeping rows of L as columns of L^T
  for (Index i = n - 1; i >= 0; --i) {
    const double *row = f.data_.data() + f.offset_[i];
    const Index fi = f.first_[i];
    x[i] /= row[i - fi];
    const double xi = x[i];
    for (Index k = fi; k < i; ++k) x[k] -= row[k - fi] * xi;
  }
}

Vector spd_solve(const SpdFactor &f, std::span<const double> rhs) {
  Vector x(rhs.begin(), rhs.end());
  spd_solve_in_place(f, x);
  return x;
}

} // namespace ras
