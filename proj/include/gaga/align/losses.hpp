#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/tensor/tape.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::align {

// sum_i ( ||a_i - b_i||^2 - 1/(n-1) sum_{j != i} ||a_i - b_j||^2 ) over n
// matched rows. Throws ContractError for n < 2.
template <typename T>
tensor::BasicTensor<T> contrast_loss(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& a,
                                     const tensor::BasicTensor<T>& b);

// Text-side rows against annotation-side rows.
template <typename T>
tensor::BasicTensor<T> loss_eq1(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& h_t,
                                const tensor::BasicTensor<T>& h_a) {
  return contrast_loss(tape, h_t, h_a);
}

struct VqMatch {
  std::int32_t index = 0;
  double sq_dist = 0;
};

// Nearest codebook row, ties to the lowest index. Throws ContractError for an
// empty codebook and ShapeError for a width mismatch.
template <typename T>
VqMatch vq_map(std::span<const T> row, const tensor::BasicTensor<T>& codebook);

template <typename T>
std::vector<std::int32_t> vq_assign(const tensor::BasicTensor<T>& rows, const tensor::BasicTensor<T>& codebook);

struct CombinedLossParts {
  double prototype = 0;  // contrast of h_t against the quantized h_a
  double pairs = 0;      // loss_eq1
};

// alpha * contrast(h_t, z_a) + (1 - alpha) * loss_eq1(h_t, h_a), where z_a is
// h_a quantized to `codebook` with a straight-through gradient. `assignments`
// receives the quantization indices when non-null.
template <typename T>
tensor::BasicTensor<T> loss_combined(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& h_t,
                                     const tensor::BasicTensor<T>& h_a, const tensor::BasicTensor<T>& codebook,
                                     double alpha, std::vector<std::int32_t>* assignments = nullptr,
                                     CombinedLossParts* parts = nullptr);

}  // namespace gaga::align
