#pragma once

#include <cstdint>
#include <memory>
#include <tuple>
#include <vector>

#include "gaga/kernels/kernels.hpp"

namespace gaga::tensor {

// Constant (non-differentiable) sparse matrix in CSR form, with its transpose
// built once so spmm's backward pass is another spmm. Storage is shared and
// immutable, so copies are cheap.
template <typename T>
class SparseMatrix {
 public:
  struct Entry {
    std::int32_t row, col;
    T value;
  };

  SparseMatrix() = default;
  // Duplicate (row, col) entries are summed.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries);

  std::size_t rows() const noexcept { return d_ ? d_->rows : 0; }
  std::size_t cols() const noexcept { return d_ ? d_->cols : 0; }
  std::size_t nnz() const noexcept { return d_ ? d_->col_idx.size() : 0; }

  kernels::CsrView<T> view() const { return {d_->row_ptr, d_->col_idx, d_->values, d_->rows, d_->cols}; }
  kernels::CsrView<T> transposed_view() const {
    return {d_->t_row_ptr, d_->t_col_idx, d_->t_values, d_->cols, d_->rows};
  }

  T at(std::size_t r, std::size_t c) const;

 private:
  struct Data {
    std::size_t rows = 0, cols = 0;
    std::vector<std::int64_t> row_ptr, t_row_ptr;
    std::vector<std::int32_t> col_idx, t_col_idx;
    std::vector<T> values, t_values;
  };
  std::shared_ptr<const Data> d_;
};

extern template class SparseMatrix<float>;
extern template class SparseMatrix<double>;

}  // namespace gaga::tensor
