#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gaga/graph/embedding_table.hpp"
#include "gaga/providers/cache.hpp"
#include "gaga/providers/http.hpp"

namespace gaga::providers {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  // One row per text, in order. Throws ContractError on an empty list.
  virtual graph::EmbeddingTable embed(std::span<const std::string> texts) = 0;
};

// Signed feature hashing of lowercase alphanumeric tokens into `dim`
// buckets, L2-normalized. Text with no tokens maps to the zero vector.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t salt = 0);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  graph::EmbeddingTable embed(std::span<const std::string> texts) override;
  std::vector<float> embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t salt_;
};

// Precomputed GEMB table returned row for row; the text list only fixes the
// expected row count.
class FileEmbedder final : public Embedder {
 public:
  FileEmbedder(std::filesystem::path path, std::size_t expected_dim = 0);
  std::string id() const override { return "file:" + path_.filename().string(); }
  std::size_t dim() const override { return table_.dim(); }
  graph::EmbeddingTable embed(std::span<const std::string> texts) override;

 private:
  std::filesystem::path path_;
  graph::EmbeddingTable table_;
};

// OpenAI-style embeddings endpoint: POST {"model", "input": [...]} and read
// data[i].embedding. Vectors are cached per text.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, std::string model, std::size_t dim, std::string api_key,
               std::shared_ptr<JsonlCache> cache, RetryPolicy retry = {}, std::size_t batch = 64);
  std::string id() const override { return "http:" + model_; }
  std::size_t dim() const override { return dim_; }
  graph::EmbeddingTable embed(std::span<const std::string> texts) override;
  std::size_t remote_calls() const noexcept { return remote_calls_; }

 private:
  std::string endpoint_, model_, api_key_;
  std::size_t dim_;
  std::shared_ptr<JsonlCache> cache_;
  RetryPolicy retry_;
  std::size_t batch_;
  std::size_t remote_calls_ = 0;
};

struct EmbedderConfig {
  std::string backend = "hash";  // hash | file | http
  std::size_t dim = 64;
  std::filesystem::path file;
  std::string endpoint;  // falls back to $GAGA_EMBED_ENDPOINT
  std::string model = "all-MiniLM-L6-v2";
  std::filesystem::path cache_file;
  RetryPolicy retry;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

}  // namespace gaga::providers
