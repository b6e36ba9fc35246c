#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gaga/align/codebook.hpp"
#include "gaga/align/gcn.hpp"
#include "gaga/align/subgraph.hpp"
#include "gaga/annograph/annotation_graph.hpp"
#include "gaga/graph/embedding_table.hpp"
#include "gaga/graph/tag.hpp"
#include "gaga/tensor/checkpoint.hpp"

namespace gaga::align {

struct AlignConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  int hops = 2;
  int anno_hops = -1;  // radius on the annotation graph; < 0 means `hops`
  std::size_t node_cap = kDefaultNodeCap;
  std::size_t kp = 40;
  std::size_t hidden = 64;
  std::size_t layers = 4;
  double lr = 5e-5;
  double alpha = 0.6;
  double gamma = 0.99;
  double init_noise = 0.01;
  int reseed_after = kDefaultReseedAfter;
  std::uint64_t seed = 0;
};

struct EpochLog {
  double loss = 0;       // mean over the epoch's batches
  double prototype = 0;  // mean prototype-contrast term
  double pairs = 0;      // mean pair-contrast term
};

struct AlignResult {
  GcnEncoder encoder;
  PrototypeCodebook codebook;
  std::vector<EpochLog> log;
};

// The encoder both training and the untrained baseline start from.
GcnEncoder initial_encoder(std::size_t dim, const AlignConfig& cfg);

// Batches of seed positions for one epoch; a trailing batch of one is merged
// into the previous batch so every batch has a defined negative term.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t seeds, std::size_t batch_size, Rng& rng);

// Trains on one pair per annotation node. `text_features` rows follow the TAG
// nodes and `anno_features` rows follow the annotation graph nodes.
AlignResult align_train(const graph::Tag& tag, const graph::EmbeddingTable& text_features,
                        const annograph::AnnotationGraph& ag, const graph::EmbeddingTable& anno_features,
                        const AlignConfig& cfg);

// Pooled embeddings of both sides for every pair, in annotation order.
struct PairEmbeddings {
  tensor::Tensor text, annotation;
};
PairEmbeddings embed_pairs(const GcnEncoder& enc, const graph::Tag& tag, const graph::EmbeddingTable& text_features,
                           const annograph::AnnotationGraph& ag, const graph::EmbeddingTable& anno_features, int hops,
                           std::size_t node_cap, int anno_hops = -1);

tensor::Checkpoint encoder_checkpoint(const GcnEncoder& enc, const PrototypeCodebook& cb);
void save_alignment(const std::filesystem::path& dir, const AlignResult& result, const nlohmann::json& config);
AlignResult load_alignment(const std::filesystem::path& dir);

}  // namespace gaga::align
