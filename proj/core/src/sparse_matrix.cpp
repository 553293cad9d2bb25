#include "pcdm/sparse_matrix.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <string>

#include "pcdm/error.hpp"

namespace pcdm {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw Error("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                  ") outside " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    }
    if (!std::isfinite(t.value)) throw Error("non-finite matrix entry");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  // merge duplicates, drop zeros
  std::vector<Triplet> merged;
  merged.reserve(entries.size());
  for (const auto& t : entries) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col) {
      merged.back().value += t.value;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Triplet& t) { return t.value == 0.0; });

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  m.col_ptr_.assign(cols + 1, 0);
  m.row_idx_.resize(merged.size());
  m.row_val_.resize(merged.size());
  m.col_idx_.resize(merged.size());
  m.col_val_.resize(merged.size());

  for (const auto& t : merged) {
    ++m.row_ptr_[t.row + 1];
    ++m.col_ptr_[t.col + 1];
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
  std::partial_sum(m.col_ptr_.begin(), m.col_ptr_.end(), m.col_ptr_.begin());

  std::vector<std::size_t> col_fill(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (std::size_t k = 0; k < merged.size(); ++k) {
    const auto& t = merged[k];
    m.row_idx_[k] = t.col;
    m.row_val_[k] = t.value;
    // rows are visited in increasing order, so each column list stays sorted
    const auto slot = col_fill[t.col]++;
    m.col_idx_[slot] = t.row;
    m.col_val_[slot] = t.value;
  }
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto v = row(r);
  const auto it = std::lower_bound(v.index.begin(), v.index.end(), c);
  if (it == v.index.end() || *it != c) return 0.0;
  return v.value[static_cast<std::size_t>(it - v.index.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += row_val_[k] * x[row_idx_[k]];
    y[r] = acc;
  }
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  for (std::size_t c = 0; c < cols_; ++c) {
    double acc = 0.0;
    for (auto k = col_ptr_[c]; k < col_ptr_[c + 1]; ++k) acc += col_val_[k] * x[col_idx_[k]];
    y[c] = acc;
  }
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, row_idx_[k], row_val_[k]});
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  auto t = triplets();
  for (auto& e : t) std::swap(e.row, e.col);
  return from_triplets(cols_, rows_, std::move(t));
}

}  // namespace pcdm
