#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaga/graph/csr_graph.hpp"

namespace gaga::graph {

enum class Split : std::uint8_t { none, train, valid, test };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);  // throws ValidationError on unknown names

inline constexpr std::int32_t kNoLabel = -1;

// Text-attributed graph. Immutable once validated.
struct Tag {
  std::vector<std::string> texts;
  CsrGraph graph;
  std::vector<std::int32_t> labels;  // kNoLabel for unlabeled nodes
  std::int32_t num_classes = 0;
  std::vector<Split> split;

  std::size_t num_nodes() const noexcept { return texts.size(); }
  bool has_labels() const;
  std::vector<NodeId> nodes_in(Split s) const;

  // Throws ValidationError when sizes disagree, a label is outside
  // [0, num_classes), or splits do not cover exactly the labeled nodes.
  void validate() const;

  friend bool operator==(const Tag&, const Tag&) = default;
};

// Node file: JSON lines {id, text, label?, split?} with ids 0..N-1 in any
// order. Edge file: one whitespace-separated pair per line; blank lines and
// lines starting with '#' are skipped. When `num_classes` is absent it is
// inferred as max label + 1.
Tag load_tag(const std::filesystem::path& node_file, const std::filesystem::path& edge_file,
             std::optional<std::int32_t> num_classes = std::nullopt);

Tag parse_tag(std::string_view node_jsonl, std::string_view edge_list,
              std::optional<std::int32_t> num_classes = std::nullopt);

std::string serialize_nodes(const Tag& tag);
std::string serialize_edges(const std::vector<Edge>& edges);
void save_tag(const Tag& tag, const std::filesystem::path& node_file, const std::filesystem::path& edge_file);

// Same nodes, texts, labels and splits with a different edge set.
Tag with_edges(const Tag& tag, std::span<const Edge> edges);

}  // namespace gaga::graph
