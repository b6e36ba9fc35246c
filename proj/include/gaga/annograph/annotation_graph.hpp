#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "gaga/graph/embedding_table.hpp"
#include "gaga/graph/tag.hpp"
#include "gaga/providers/annotate.hpp"

namespace gaga::annograph {

// Dot product over the norm product. Throws DegenerateInputError when either
// vector has zero norm.
double cosine_sim(std::span<const float> u, std::span<const float> v);

// Annotation nodes in selection order, wired by cosine KNN. Stored as a Tag
// whose node texts are the annotation texts, so graph tooling applies.
struct AnnotationGraph {
  graph::Tag tag;
  std::vector<providers::AnnotationTarget> targets;  // parallel to tag nodes
  std::size_t k = 0;

  std::size_t num_nodes() const noexcept { return tag.num_nodes(); }
};

// Top-k most similar peers of every row (ties to the lower index), unioned
// and symmetrized. Requires k < row count.
std::vector<graph::Edge> knn_edges(const graph::EmbeddingTable& emb, std::size_t k);

AnnotationGraph build_annotation_graph(std::span<const providers::AnnotationRecord> records,
                                       const graph::EmbeddingTable& emb, std::size_t k);

void save_annotation_graph(const AnnotationGraph& g, const std::filesystem::path& dir);
// `records` supplies the targets; it must be the file the graph was built from.
AnnotationGraph load_annotation_graph(const std::filesystem::path& dir,
                                      std::span<const providers::AnnotationRecord> records, std::size_t k);

}  // namespace gaga::annograph
