#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mpc/common.hpp"

namespace mpc {

struct MatrixEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;

  friend bool operator==(const MatrixEntry& a, const MatrixEntry& b) {
    return a.row == b.row && a.col == b.col && a.value == b.value;
  }
};

// One (index, value) pair as seen from a row or column slice.
struct SparseTerm {
  int index = 0;  // column index when iterating a row, row index otherwise
  double value = 0.0;
};

// Immutable sparse matrix with nonnegative finite entries and both row-major
// and column-major adjacency. Entries are kept in canonical (row, col) order;
// duplicates are rejected at construction.
class SparseNonnegMatrix {
 public:
  SparseNonnegMatrix() = default;

  SparseNonnegMatrix(int rows, int cols, std::vector<MatrixEntry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows < 0 || cols < 0) throw ParseError("negative matrix dimension");
    std::sort(entries_.begin(), entries_.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
              });
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const MatrixEntry& e = entries_[k];
      if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
        throw ParseError("index out of range: (" + std::to_string(e.row) +
                         ", " + std::to_string(e.col) + ")");
      if (!(e.value >= 0.0) || !std::isfinite(e.value))
        throw ParseError("negative coefficient at (" + std::to_string(e.row) +
                         ", " + std::to_string(e.col) + ")");
      if (k > 0 && entries_[k - 1].row == e.row && entries_[k - 1].col == e.col)
        throw ParseError("duplicate entry at (" + std::to_string(e.row) +
                         ", " + std::to_string(e.col) + ")");
    }
    build_adjacency();
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<MatrixEntry>& entries() const { return entries_; }

  std::span<const SparseTerm> row(int i) const {
    return {row_terms_.data() + row_ptr_[i],
            row_terms_.data() + row_ptr_[i + 1]};
  }
  std::span<const SparseTerm> col(int j) const {
    return {col_terms_.data() + col_ptr_[j],
            col_terms_.data() + col_ptr_[j + 1]};
  }

  // y = M x, allocated fresh. Summation in row-major entry order.
  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
    for (int i = 0; i < rows_; ++i) {
      double acc = 0.0;
      for (const SparseTerm& t : row(i)) acc += t.value * x[t.index];
      y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
  }

  friend bool operator==(const SparseNonnegMatrix& a,
                         const SparseNonnegMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  void build_adjacency() {
    row_ptr_.assign(static_cast<std::size_t>(rows_) + 1, 0);
    col_ptr_.assign(static_cast<std::size_t>(cols_) + 1, 0);
    for (const MatrixEntry& e : entries_) {
      ++row_ptr_[static_cast<std::size_t>(e.row) + 1];
      ++col_ptr_[static_cast<std::size_t>(e.col) + 1];
    }
    for (int i = 0; i < rows_; ++i) row_ptr_[i + 1] += row_ptr_[i];
    for (int j = 0; j < cols_; ++j) col_ptr_[j + 1] += col_ptr_[j];
    row_terms_.resize(entries_.size());
    col_terms_.resize(entries_.size());
    std::vector<std::size_t> rfill(row_ptr_.begin(), row_ptr_.end() - 1);
    std::vector<std::size_t> cfill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (const MatrixEntry& e : entries_) {
      row_terms_[rfill[e.row]++] = {e.col, e.value};
      col_terms_[cfill[e.col]++] = {e.row, e.value};
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<MatrixEntry> entries_;
  std::vector<std::size_t> row_ptr_, col_ptr_;
  std::vector<SparseTerm> row_terms_, col_terms_;
};

}  // namespace mpc
