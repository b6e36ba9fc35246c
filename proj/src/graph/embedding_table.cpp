#include "gaga/graph/embedding_table.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"

namespace gaga::graph {

namespace {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw ParseError("embedding file truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t count, std::size_t dim, std::vector<float> data, std::string provenance)
    : count_(count), dim_(dim), data_(std::move(data)), provenance_(std::move(provenance)) {
  if (data_.size() != count_ * dim_)
    throw ShapeError("embedding table " + std::to_string(count_) + "x" + std::to_string(dim_) + " given " +
                     std::to_string(data_.size()) + " values");
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw ValidationError("embedding row " + std::to_string(i / dim_) + " has a non-finite value");
}

tensor::Tensor EmbeddingTable::to_tensor() const { return tensor::Tensor({count_, dim_}, data_); }

EmbeddingTable EmbeddingTable::select(std::span<const std::int32_t> rows) const {
  std::vector<float> out;
  out.reserve(rows.size() * dim_);
  for (auto r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= count_)
      throw ShapeError("embedding row " + std::to_string(r) + " out of range");
    auto src = row(static_cast<std::size_t>(r));
    out.insert(out.end(), src.begin(), src.end());
  }
  return EmbeddingTable(rows.size(), dim_, std::move(out), provenance_);
}

std::string encode_gemb(const EmbeddingTable& t) {
  std::string out = "GEMB";
  out.reserve(4 + 4 + 8 + 4 + t.data().size() * 4);
  put_le<std::uint32_t>(out, kGembVersion);
  put_le<std::uint64_t>(out, t.count());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
  for (float v : t.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingTable decode_gemb(std::string_view bytes, std::string provenance) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "GEMB") throw ParseError("not a GEMB embedding file");
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kGembVersion) throw ParseError("unsupported GEMB version " + std::to_string(version));
  const auto count = get_le<std::uint64_t>(bytes, pos);
  const auto dim = get_le<std::uint32_t>(bytes, pos);
  if (dim == 0 || count > (bytes.size() - pos) / 4 / dim || (bytes.size() - pos) != count * dim * 4)
    throw ParseError("GEMB payload size does not match count x dim");
  std::vector<float> data(count * dim);
  for (auto& v : data) v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
  return EmbeddingTable(count, dim, std::move(data), std::move(provenance));
}

void save_gemb(const EmbeddingTable& t, const std::filesystem::path& path) { io::write_file(path, encode_gemb(t)); }

EmbeddingTable load_gemb(const std::filesystem::path& path) {
  return decode_gemb(io::read_file(path), "file:" + path.string());
}

}  // namespace gaga::graph
