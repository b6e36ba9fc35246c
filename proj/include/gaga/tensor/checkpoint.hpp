#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gaga/tensor/tensor.hpp"

namespace gaga::tensor {

// On-disk tensor container: a directory holding `index.json` (name -> shape,
// dtype, byte offset, plus free-form metadata) and `tensors.bin`, one raw
// little-endian float32 blob. Entries keep insertion order; a save/load round
// trip is bit-exact.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json meta = nlohmann::json::object();

  void put(std::string name, const Tensor& t);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace gaga::tensor
