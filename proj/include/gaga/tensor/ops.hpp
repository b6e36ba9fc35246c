#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/tensor/sparse.hpp"
#include "gaga/tensor/tape.hpp"
#include "gaga/tensor/tensor.hpp"

// Differentiable operations. Each op computes its forward value eagerly and,
// if any input requires a gradient, records an exact backward rule on the
// tape. Reductions accumulate in double.
namespace gaga::tensor::ops {

// op(a) * op(b), where op transposes when the flag is set.
template <typename T>
BasicTensor<T> matmul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b,
                      bool trans_a = false, bool trans_b = false);

// Elementwise; shapes must match or one side must hold a single value.
template <typename T>
BasicTensor<T> add(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(BasicTape<T>& tape, const BasicTensor<T>& a, double s);
template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> sigmoid(BasicTape<T>& tape, const BasicTensor<T>& a);

// Scalar reductions.
template <typename T>
BasicTensor<T> sum(BasicTape<T>& tape, const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> mean(BasicTape<T>& tape, const BasicTensor<T>& a);

// Row-wise ops on 2-D tensors. row_sum and sq_norm_rows return m x 1.
template <typename T>
BasicTensor<T> row_sum(BasicTape<T>& tape, const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> sq_norm_rows(BasicTape<T>& tape, const BasicTensor<T>& a);
// All-zero rows stay zero.
template <typename T>
BasicTensor<T> l2_normalize_rows(BasicTape<T>& tape, const BasicTensor<T>& a);
// Per-row max subtraction keeps large logits finite.
template <typename T>
BasicTensor<T> softmax_rows(BasicTape<T>& tape, const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> log_softmax_rows(BasicTape<T>& tape, const BasicTensor<T>& a);

// s * x for a constant sparse s.
template <typename T>
BasicTensor<T> spmm(BasicTape<T>& tape, const SparseMatrix<T>& s, const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> gather_rows(BasicTape<T>& tape, const BasicTensor<T>& x, std::span<const std::int32_t> rows);

// out(i, j) = ||a_i - b_j||^2
template <typename T>
BasicTensor<T> pairwise_sq_dist(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);

// Forward value is `quantized`; the backward pass hands the incoming
// gradient to `input` unchanged.
template <typename T>
BasicTensor<T> straight_through(BasicTape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& quantized);

// Mean negative log-likelihood of `labels` under softmax(logits).
template <typename T>
BasicTensor<T> cross_entropy(BasicTape<T>& tape, const BasicTensor<T>& logits, std::span<const std::int32_t> labels);

// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets.
template <typename T>
BasicTensor<T> bce_with_logits(BasicTape<T>& tape, const BasicTensor<T>& logits, std::span<const T> targets);

}  // namespace gaga::tensor::ops
