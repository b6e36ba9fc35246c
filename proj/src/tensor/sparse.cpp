#include "gaga/tensor/sparse.hpp"

#include <algorithm>

#include "gaga/common/error.hpp"

namespace gaga::tensor {

namespace {

template <typename T>
void build_csr(std::size_t rows, std::vector<typename SparseMatrix<T>::Entry> entries,
               std::vector<std::int64_t>& row_ptr, std::vector<std::int32_t>& col_idx, std::vector<T>& values) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  row_ptr.assign(rows + 1, 0);
  col_idx.clear();
  values.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!col_idx.empty() && i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      values.back() += e.value;
      continue;
    }
    col_idx.push_back(e.col);
    values.push_back(e.value);
    row_ptr[static_cast<std::size_t>(e.row) + 1] += 1;
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr[r + 1] += row_ptr[r];
}

}  // namespace

template <typename T>
SparseMatrix<T>::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
  for (const auto& e : entries) {
    if (e.row < 0 || e.col < 0 || static_cast<std::size_t>(e.row) >= rows || static_cast<std::size_t>(e.col) >= cols)
      throw ShapeError("sparse entry out of range");
  }
  std::vector<Entry> transposed;
  transposed.reserve(entries.size());
  for (const auto& e : entries) transposed.push_back({e.col, e.row, e.value});
  auto d = std::make_shared<Data>();
  d->rows = rows;
  d->cols = cols;
  build_csr<T>(rows, std::move(entries), d->row_ptr, d->col_idx, d->values);
  build_csr<T>(cols, std::move(transposed), d->t_row_ptr, d->t_col_idx, d->t_values);
  d_ = std::move(d);
}

template <typename T>
T SparseMatrix<T>::at(std::size_t r, std::size_t c) const {
  for (auto k = d_->row_ptr[r]; k < d_->row_ptr[r + 1]; ++k)
    if (static_cast<std::size_t>(d_->col_idx[k]) == c) return d_->values[k];
  return T{0};
}

template class SparseMatrix<float>;
template class SparseMatrix<double>;

}  // namespace gaga::tensor
