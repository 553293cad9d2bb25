#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcdm {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Read-only view of one compressed row or column.
struct SparseVectorView {
  std::span<const std::size_t> index;
  std::span<const double> value;

  std::size_t nnz() const noexcept { return index.size(); }
};

/// Sparse matrix stored twice: compressed rows (loss terms) and compressed
/// columns (coordinate updates). Both layouts hold the same nonzero set, with
/// strictly increasing indices and no stored zeros.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicate (row, col) entries are summed; entries that end up zero are
  /// dropped. Throws on out-of-range indices or non-finite values.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return row_val_.size(); }

  SparseVectorView row(std::size_t r) const {
    const auto b = row_ptr_[r], e = row_ptr_[r + 1];
    return {std::span(row_idx_).subspan(b, e - b), std::span(row_val_).subspan(b, e - b)};
  }
  SparseVectorView col(std::size_t c) const {
    const auto b = col_ptr_[c], e = col_ptr_[c + 1];
    return {std::span(col_idx_).subspan(b, e - b), std::span(col_val_).subspan(b, e - b)};
  }

  /// Entry lookup by binary search over the row. Zero when absent.
  double at(std::size_t r, std::size_t c) const;

  /// y = A x (overwrites y).
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = A^T x (overwrites y).
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  std::vector<Triplet> triplets() const;
  SparseMatrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> row_idx_;
  std::vector<double> row_val_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> col_val_;
};

}  // namespace pcdm
