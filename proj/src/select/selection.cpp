#include "gaga/select/selection.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "gaga/common/error.hpp"
#include "gaga/common/log.hpp"

namespace gaga::select {

using graph::Edge;
using graph::NodeId;
using json = nlohmann::json;

namespace {

std::size_t clamp_budget(std::size_t budget, std::size_t population, std::string_view what) {
  if (budget < 1) throw ContractError(std::string(what) + " budget must be at least 1");
  if (budget > population) {
    log::warn(std::string(what) + " budget " + std::to_string(budget) + " exceeds population " +
              std::to_string(population) + "; selecting all");
    return population;
  }
  return budget;
}

}  // namespace

double density_score(std::span<const float> emb, std::span<const float> center) {
  if (emb.size() != center.size())
    throw ShapeError("density_score: vector dims " + std::to_string(emb.size()) + " vs " +
                     std::to_string(center.size()));
  double s = 0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const double d = static_cast<double>(emb[i]) - center[i];
    s += d * d;
  }
  return 1.0 / (1.0 + std::sqrt(s));
}

std::vector<double> node_densities(const graph::EmbeddingTable& emb, const Clustering& clustering) {
  if (clustering.assignment.size() != emb.count() || clustering.dim != emb.dim())
    throw ShapeError("clustering does not match the embedding table");
  std::vector<double> out(emb.count());
  for (std::size_t i = 0; i < emb.count(); ++i)
    out[i] = density_score(emb.row(i), clustering.center(static_cast<std::size_t>(clustering.assignment[i])));
  return out;
}

SelectionResult top_nodes(std::span<const double> scores, std::size_t budget) {
  SelectionResult r;
  r.kind = ItemKind::node;
  r.budget = clamp_budget(budget, scores.size(), "node");
  std::vector<NodeId> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r.budget), order.end(),
                    [&](NodeId a, NodeId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
  r.nodes.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r.budget));
  for (auto v : r.nodes) r.scores.push_back(scores[v]);
  return r;
}

SelectionResult select_nodes(const graph::EmbeddingTable& emb, const Clustering& clustering, std::size_t budget) {
  return top_nodes(node_densities(emb, clustering), budget);
}

SelectionResult select_edges(const graph::Tag& tag, std::span<const double> node_scores, std::size_t budget) {
  if (node_scores.size() != tag.num_nodes())
    throw ShapeError("select_edges: " + std::to_string(node_scores.size()) + " node scores for " +
                     std::to_string(tag.num_nodes()) + " nodes");
  const auto edges = tag.graph.edges();
  SelectionResult r;
  r.kind = ItemKind::edge;
  r.budget = clamp_budget(budget, edges.size(), "edge");
  std::vector<double> score(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) score[i] = node_scores[edges[i].u] + node_scores[edges[i].v];
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  // edges() is lexicographically sorted, so the position order is the
  // lexicographic tie-break.
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r.budget), order.end(),
                    [&](std::size_t a, std::size_t b) { return score[a] != score[b] ? score[a] > score[b] : a < b; });
  for (std::size_t i = 0; i < r.budget; ++i) {
    r.edges.push_back(edges[order[i]]);
    r.scores.push_back(score[order[i]]);
  }
  return r;
}

std::size_t node_budget(std::size_t num_nodes, double rate) {
  if (!(rate > 0 && rate <= 1)) throw ValidationError("budget rate must lie in (0, 1]");
  // Subtract a hair so 0.01 * 500 stays 5 instead of rounding up to 6.
  const auto b = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(num_nodes) - 1e-9));
  return std::max<std::size_t>(1, b);
}

std::size_t edge_budget(std::size_t num_edges) {
  auto b = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_edges))));
  return std::max<std::size_t>(1, b);
}

std::string serialize_selection(const SelectionResult& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    json j;
    j["kind"] = s.kind == ItemKind::node ? "node" : "edge";
    if (s.kind == ItemKind::node)
      j["ids"] = json::array({s.nodes[i]});
    else
      j["ids"] = json::array({s.edges[i].u, s.edges[i].v});
    j["score"] = s.scores[i];
    out += j.dump();
    out += '\n';
  }
  return out;
}

SelectionResult parse_selection(std::string_view jsonl) {
  SelectionResult r;
  std::size_t line_no = 0, start = 0;
  bool first = true;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>() == "edge" ? ItemKind::edge : ItemKind::node;
      if (first) r.kind = kind;
      if (kind != r.kind) throw ParseError("selection mixes node and edge items", line_no);
      first = false;
      const auto& ids = j.at("ids");
      if (kind == ItemKind::node) {
        if (ids.size() != 1) throw ParseError("node item needs one id", line_no);
        r.nodes.push_back(ids.at(0).get<NodeId>());
      } else {
        if (ids.size() != 2) throw ParseError("edge item needs two ids", line_no);
        r.edges.push_back({ids.at(0).get<NodeId>(), ids.at(1).get<NodeId>()});
      }
      r.scores.push_back(j.at("score").get<double>());
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed selection record: ") + e.what(), line_no);
    }
  }
  r.budget = r.size();
  return r;
}

}  // namespace gaga::select
