#include "gaga/graph/edge_split.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>

#include "gaga/common/error.hpp"
#include "gaga/common/rng.hpp"

namespace gaga::graph {

namespace {

using json = nlohmann::json;

std::size_t share(double fraction, std::size_t total) {
  // The epsilon keeps products like 0.1 * 1000 from landing on 99.999...
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 1e-9));
}

json edges_json(const std::vector<Edge>& edges) {
  json a = json::array();
  for (const auto& e : edges) a.push_back({e.u, e.v});
  return a;
}

std::vector<Edge> edges_from(const json& a) {
  std::vector<Edge> out;
  for (const auto& p : a) out.push_back({p.at(0).get<NodeId>(), p.at(1).get<NodeId>()});
  return out;
}

}  // namespace

EdgeSplit make_edge_split(const Tag& tag, std::array<double, 3> fractions, std::size_t negatives_per_edge,
                          std::uint64_t seed) {
  if (negatives_per_edge < 1) throw ValidationError("negatives per edge must be at least 1");
  double total = 0;
  for (double f : fractions) {
    if (f < 0) throw ValidationError("edge split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ValidationError("edge split fractions must sum to 1");

  auto edges = tag.graph.edges();
  const auto m = edges.size();
  const auto n_valid = share(fractions[1], m), n_test = share(fractions[2], m);
  if ((fractions[2] > 0 && n_test == 0) || (fractions[1] > 0 && n_valid == 0) || n_valid + n_test >= m)
    throw ValidationError("insufficient edges: " + std::to_string(m) + " edges cannot supply the requested split");

  const auto n = tag.num_nodes();
  const auto pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (pairs - m < negatives_per_edge)
    throw ValidationError("insufficient non-edges for " + std::to_string(negatives_per_edge) + " negatives per edge");

  Rng rng = Rng(seed).split("edge_split");
  rng.shuffle(edges.begin(), edges.end());
  EdgeSplit s;
  s.test.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.valid.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test),
                 edges.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
  s.train.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), edges.end());
  for (auto* part : {&s.train, &s.valid, &s.test}) std::sort(part->begin(), part->end());

  Rng neg = rng.split("negatives");
  auto sample = [&](std::size_t count) {
    std::vector<std::vector<Edge>> lists(count);
    for (auto& list : lists) {
      std::set<Edge> picked;
      while (list.size() < negatives_per_edge) {
        const auto u = static_cast<NodeId>(neg.below(n)), v = static_cast<NodeId>(neg.below(n));
        if (u == v || tag.graph.has_edge(u, v)) continue;
        const auto e = canonical(u, v);
        if (picked.insert(e).second) list.push_back(e);
      }
    }
    return lists;
  };
  s.valid_negatives = sample(s.valid.size());
  s.test_negatives = sample(s.test.size());
  return s;
}

std::string serialize_edge_split(const EdgeSplit& split) {
  json j;
  j["train"] = edges_json(split.train);
  j["valid"] = edges_json(split.valid);
  j["test"] = edges_json(split.test);
  json vn = json::array(), tn = json::array();
  for (const auto& l : split.valid_negatives) vn.push_back(edges_json(l));
  for (const auto& l : split.test_negatives) tn.push_back(edges_json(l));
  j["valid_negatives"] = vn;
  j["test_negatives"] = tn;
  return j.dump() + "\n";
}

EdgeSplit parse_edge_split(std::string_view text) {
  try {
    const auto j = json::parse(text);
    EdgeSplit s;
    s.train = edges_from(j.at("train"));
    s.valid = edges_from(j.at("valid"));
    s.test = edges_from(j.at("test"));
    for (const auto& l : j.at("valid_negatives")) s.valid_negatives.push_back(edges_from(l));
    for (const auto& l : j.at("test_negatives")) s.test_negatives.push_back(edges_from(l));
    if (s.valid_negatives.size() != s.valid.size() || s.test_negatives.size() != s.test.size())
      throw ValidationError("edge split negative lists do not match positives");
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed edge split: ") + e.what());
  }
}

}  // namespace gaga::graph
