#include "gaga/providers/embedder.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "gaga/common/error.hpp"
#include "gaga/common/hash.hpp"

namespace gaga::providers {

using json = nlohmann::json;

namespace {

void require_texts(std::span<const std::string> texts) {
  if (texts.empty()) throw ContractError("embed needs at least one text");
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t salt) : dim_(dim), salt_(salt) {
  if (dim_ == 0) throw ValidationError("hash embedder dim must be positive");
}

std::string HashEmbedder::id() const { return "hash:d" + std::to_string(dim_) + ":s" + std::to_string(salt_); }

std::vector<float> HashEmbedder::embed_one(std::string_view text) const {
  std::vector<double> acc(dim_, 0.0);
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    const auto h = fnv1a64(tok) ^ salt_;
    const auto mixed = h * 0x9e3779b97f4a7c15ULL;
    const auto bucket = static_cast<std::size_t>(mixed % dim_);
    acc[bucket] += (mixed >> 63) ? -1.0 : 1.0;
    tok.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c))
      tok.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();
  double norm = 0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(dim_, 0.0f);
  if (norm > 0)
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

graph::EmbeddingTable HashEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  std::vector<float> data;
  data.reserve(texts.size() * dim_);
  for (const auto& t : texts) {
    auto row = embed_one(t);
    data.insert(data.end(), row.begin(), row.end());
  }
  return graph::EmbeddingTable(texts.size(), dim_, std::move(data), id());
}

FileEmbedder::FileEmbedder(std::filesystem::path path, std::size_t expected_dim)
    : path_(std::move(path)), table_(graph::load_gemb(path_)) {
  if (expected_dim != 0 && table_.dim() != expected_dim)
    throw ValidationError("embedding file " + path_.string() + " has dim " + std::to_string(table_.dim()) +
                          " but " + std::to_string(expected_dim) + " was declared");
}

graph::EmbeddingTable FileEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  if (texts.size() != table_.count())
    throw ShapeError("embedding file " + path_.string() + " holds " + std::to_string(table_.count()) +
                     " rows but " + std::to_string(texts.size()) + " texts were given");
  return table_;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model, std::size_t dim, std::string api_key,
                           std::shared_ptr<JsonlCache> cache, RetryPolicy retry, std::size_t batch)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      dim_(dim),
      cache_(cache ? std::move(cache) : std::make_shared<JsonlCache>()),
      retry_(retry),
      batch_(batch == 0 ? 1 : batch) {
  if (endpoint_.empty()) throw ValidationError("http embedder needs an endpoint (GAGA_EMBED_ENDPOINT)");
}

graph::EmbeddingTable HttpEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  auto key = [&](const std::string& t) { return sha256_hex(t) + "|" + id(); };
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (!cache_->get(key(texts[i]))) missing.push_back(i);

  for (std::size_t start = 0; start < missing.size(); start += batch_) {
    const auto end = std::min(missing.size(), start + batch_);
    json input = json::array();
    for (auto i = start; i < end; ++i) input.push_back(texts[missing[i]]);
    const json req{{"model", model_}, {"input", input}};
    ++remote_calls_;
    const auto res = post_json_with_retry(endpoint_, req.dump(), api_key_, retry_);
    json body;
    try {
      body = json::parse(res.body);
      const auto& data = body.at("data");
      if (data.size() != end - start)
        throw ProviderError("embedding response has " + std::to_string(data.size()) + " rows for " +
                                std::to_string(end - start) + " inputs",
                            res.status);
      for (std::size_t r = 0; r < data.size(); ++r) {
        const auto& item = data[r];
        const auto idx = item.contains("index") ? item.at("index").get<std::size_t>() : r;
        if (idx >= end - start) throw ProviderError("embedding response index out of range", res.status);
        auto vec = item.at("embedding").get<std::vector<float>>();
        if (vec.size() != dim_)
          throw ProviderError("embedding dim " + std::to_string(vec.size()) + " differs from declared " +
                                  std::to_string(dim_),
                              res.status);
        cache_->put(key(texts[missing[start + idx]]), vec);
      }
    } catch (const json::exception& e) {
      throw ProviderError(std::string("malformed embedding response: ") + e.what(), res.status);
    }
  }

  std::vector<float> data;
  data.reserve(texts.size() * dim_);
  for (const auto& t : texts) {
    auto v = cache_->get(key(t));
    if (!v) throw ProviderError("embedding for a text is missing after the remote call");
    auto vec = v->get<std::vector<float>>();
    if (vec.size() != dim_) throw ProviderError("cached embedding has the wrong dim");
    data.insert(data.end(), vec.begin(), vec.end());
  }
  return graph::EmbeddingTable(texts.size(), dim_, std::move(data), id());
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  if (cfg.backend == "hash") return std::make_unique<HashEmbedder>(cfg.dim);
  if (cfg.backend == "file") return std::make_unique<FileEmbedder>(cfg.file, cfg.dim);
  if (cfg.backend == "http") {
    auto cache = std::make_shared<JsonlCache>(cfg.cache_file);
    return std::make_unique<HttpEmbedder>(env_or("GAGA_EMBED_ENDPOINT", cfg.endpoint), cfg.model, cfg.dim,
                                          env_or("GAGA_LLM_API_KEY", ""), cache, cfg.retry);
  }
  throw ValidationError("unknown embedding backend '" + cfg.backend + "' (hash, file, http)");
}

}  // namespace gaga::providers
