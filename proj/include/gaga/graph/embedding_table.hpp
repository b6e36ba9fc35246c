#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gaga/kernels/kernels.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::graph {

// Row-major float32 vectors, one per item of an owning node set.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws ShapeError on a size mismatch and ValidationError on non-finite
  // values.
  EmbeddingTable(std::size_t count, std::size_t dim, std::vector<float> data, std::string provenance = {});

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& provenance() const noexcept { return provenance_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  kernels::MatView<float> view() const { return {data_.data(), count_, dim_}; }
  tensor::Tensor to_tensor() const;

  // Rows picked by index, in the given order.
  EmbeddingTable select(std::span<const std::int32_t> rows) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.count_ == b.count_ && a.dim_ == b.dim_ && a.data_ == b.data_;
  }

 private:
  std::size_t count_ = 0, dim_ = 0;
  std::vector<float> data_;
  std::string provenance_;
};

inline constexpr std::uint32_t kGembVersion = 1;

// Binary layout: "GEMB", u32 version, u64 count, u32 dim, then count * dim
// little-endian f32. The provenance string is not part of the format.
std::string encode_gemb(const EmbeddingTable& t);
EmbeddingTable decode_gemb(std::string_view bytes, std::string provenance = {});
void save_gemb(const EmbeddingTable& t, const std::filesystem::path& path);
EmbeddingTable load_gemb(const std::filesystem::path& path);

}  // namespace gaga::graph
