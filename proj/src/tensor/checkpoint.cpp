#include "gaga/tensor/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"

namespace gaga::tensor {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kIndex = "index.json";
constexpr const char* kBlob = "tensors.bin";

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

float get_f32(const std::string& in, std::size_t pos) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return std::bit_cast<float>(bits);
}
}  // namespace

void Checkpoint::put(std::string name, const Tensor& t) {
  for (auto& [n, existing] : tensors) {
    if (n == name) {
      existing = t;
      return;
    }
  }
  tensors.emplace_back(std::move(name), t);
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw MissingArtifactError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& entry : tensors)
    if (entry.first == name) return true;
  return false;
}

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir);
  std::string blob;
  json entries = json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    entries.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f32"},
                       {"offset", blob.size()},
                       {"count", t.numel()}});
    for (float v : t.data()) put_f32(blob, v);
  }
  json index = {{"format", "gaga-tensors"}, {"version", 1}, {"blob", kBlob}, {"tensors", entries}, {"meta", ckpt.meta}};
  io::write_file(dir / kBlob, blob);
  io::write_file(dir / kIndex, index.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  io::require_file(dir / kIndex);
  io::require_file(dir / kBlob);
  json index;
  try {
    index = json::parse(io::read_file(dir / kIndex));
  } catch (const json::exception& e) {
    throw ParseError("checkpoint index " + (dir / kIndex).string() + ": " + e.what());
  }
  const std::string blob = io::read_file(dir / kBlob);
  Checkpoint ckpt;
  ckpt.meta = index.value("meta", json::object());
  for (const auto& e : index.at("tensors")) {
    if (e.at("dtype") != "f32") throw ParseError("unsupported dtype " + e.at("dtype").dump());
    Shape shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = numel_of(shape);
    if (offset + 4 * count > blob.size()) throw ParseError("checkpoint blob truncated at " + e.at("name").dump());
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = get_f32(blob, offset + 4 * i);
    ckpt.tensors.emplace_back(e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace gaga::tensor
