#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <filesystem>
#include <set>

#include "gaga/common/error.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/graph/edge_split.hpp"
#include "gaga/graph/embedding_table.hpp"
#include "gaga/graph/synth.hpp"
#include "gaga/graph/tag.hpp"

using namespace gaga;
using namespace gaga::graph;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gaga_test_graph_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string plain_nodes(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += R"({"id":)" + std::to_string(i) + R"(,"text":"node )" + std::to_string(i) + "\"}\n";
  return s;
}

SynthSpec small_spec(std::int32_t classes, std::size_t per_class, double p_in, double p_out) {
  SynthSpec s;
  s.classes = classes;
  s.nodes_per_class = per_class;
  s.p_in = p_in;
  s.p_out = p_out;
  return s;
}

}  // namespace

TEST_CASE("load_tag: three nodes and one edge") {
  auto tag = parse_tag(plain_nodes(3), "0 1\n");
  CHECK(tag.num_nodes() == 3);
  CHECK(tag.graph.degree(0) == 1);
  CHECK(tag.graph.degree(1) == 1);
  CHECK(tag.graph.degree(2) == 0);
}

TEST_CASE("load_tag: reversed duplicate collapses to one undirected edge") {
  auto tag = parse_tag(plain_nodes(3), "0 1\n1 0\n0 1\n");
  CHECK(tag.graph.num_edges() == 1);
  CHECK(tag.graph.has_edge(1, 0));
}

TEST_CASE("load_tag: dangling endpoint is rejected") {
  CHECK_THROWS_AS(parse_tag(plain_nodes(3), "0 9\n"), ValidationError);
  try {
    parse_tag(plain_nodes(3), "0 1\n0 9\n");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("load_tag: parse errors carry the line number") {
  try {
    parse_tag("{\"id\":0,\"text\":\"a\"}\n{oops\n", "");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_tag(plain_nodes(2), "0 1\n1 x\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("load_tag: labels, classes and split coverage are validated") {
  const std::string nodes = R"({"id":0,"text":"a","label":0,"split":"train"}
{"id":1,"text":"b","label":3,"split":"test"}
{"id":2,"text":"c"}
)";
  auto tag = parse_tag(nodes, "");
  CHECK(tag.num_classes == 4);
  CHECK(tag.labels[2] == kNoLabel);
  CHECK(tag.split[1] == Split::test);
  CHECK_THROWS_AS(parse_tag(nodes, "", 3), ValidationError);
  CHECK_THROWS_AS(parse_tag(R"({"id":0,"text":"a","label":0})" "\n", ""), ValidationError);
  CHECK_THROWS_AS(parse_tag(R"({"id":0,"text":"a","split":"train"})" "\n", ""), ValidationError);
  CHECK_THROWS_AS(parse_tag(R"({"id":1,"text":"a"})" "\n", ""), ValidationError);
  CHECK_THROWS_AS(parse_tag(plain_nodes(1) + plain_nodes(1), ""), ParseError);
}

TEST_CASE("self-loops are dropped and isolated nodes are legal") {
  auto tag = parse_tag(plain_nodes(4), "2 2\n0 1\n");
  CHECK(tag.graph.num_edges() == 1);
  CHECK(tag.graph.degree(2) == 0);
  CHECK(tag.graph.degree(3) == 0);
}

TEST_CASE("CSR neighbor queries match an adjacency-matrix oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 1 + rng.below(50);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<Edge> edges;
    const auto m = rng.below(3 * n + 1);
    for (std::uint64_t i = 0; i < m; ++i) {
      const auto u = static_cast<NodeId>(rng.below(n)), v = static_cast<NodeId>(rng.below(n));
      edges.push_back({u, v});
      if (u != v) adj[u][v] = adj[v][u] = true;
    }
    CsrGraph g(n, edges);
    std::size_t edge_count = 0;
    for (std::size_t u = 0; u < n; ++u) {
      std::vector<NodeId> expected;
      for (std::size_t v = 0; v < n; ++v)
        if (adj[u][v]) expected.push_back(static_cast<NodeId>(v));
      auto nb = g.neighbors(static_cast<NodeId>(u));
      CHECK(std::vector<NodeId>(nb.begin(), nb.end()) == expected);
      for (std::size_t v = 0; v < n; ++v) CHECK(g.has_edge(static_cast<NodeId>(u), static_cast<NodeId>(v)) == adj[u][v]);
      edge_count += expected.size();
    }
    CHECK(g.num_edges() * 2 == edge_count);
  }
}

TEST_CASE("load -> save -> load is the identity") {
  auto tag = synth_tag(small_spec(3, 20, 0.3, 0.02), 5);
  auto dir = scratch_dir("roundtrip");
  save_tag(tag, dir / "nodes.jsonl", dir / "edges.txt");
  auto back = load_tag(dir / "nodes.jsonl", dir / "edges.txt", tag.num_classes);
  CHECK(back == tag);
  save_tag(back, dir / "nodes2.jsonl", dir / "edges2.txt");
  auto again = load_tag(dir / "nodes2.jsonl", dir / "edges2.txt", tag.num_classes);
  CHECK(again == tag);
  CHECK_THROWS_AS(load_tag(dir / "missing.jsonl", dir / "edges.txt"), MissingArtifactError);
}

TEST_CASE("synth_tag: p_in=1, p_out=0 gives disjoint cliques") {
  auto tag = synth_tag(small_spec(2, 3, 1.0, 0.0), 1);
  CHECK(tag.graph.edges() == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}});
}

TEST_CASE("synth_tag: deterministic in seed") {
  auto spec = small_spec(3, 30, 0.2, 0.01);
  auto a = synth_tag(spec, 9), b = synth_tag(spec, 9), c = synth_tag(spec, 10);
  CHECK(a == b);
  CHECK(serialize_nodes(a) == serialize_nodes(b));
  CHECK_FALSE(a == c);
}

TEST_CASE("synth_tag: invalid probabilities are rejected") {
  CHECK_THROWS_AS(synth_tag(small_spec(2, 3, 0.1, 0.1), 1), ValidationError);
  CHECK_THROWS_AS(synth_tag(small_spec(2, 3, 1.5, 0.1), 1), ValidationError);
  CHECK_THROWS_AS(synth_tag(small_spec(2, 3, 0.5, -0.1), 1), ValidationError);
}

TEST_CASE("synth_tag: intra and inter edge counts sit within 3 sigma of the binomial expectation") {
  const std::int32_t C = 4;
  const std::size_t per = 125;
  const double p_in = 0.05, p_out = 0.005;
  auto tag = synth_tag(small_spec(C, per, p_in, p_out), 2024);
  std::size_t intra = 0, inter = 0;
  for (const auto& e : tag.graph.edges()) (tag.labels[e.u] == tag.labels[e.v] ? intra : inter) += 1;
  const double intra_pairs = C * (per * (per - 1) / 2.0);
  const double inter_pairs = (C * (C - 1) / 2.0) * per * per;
  const double mu_in = intra_pairs * p_in, sd_in = std::sqrt(intra_pairs * p_in * (1 - p_in));
  const double mu_out = inter_pairs * p_out, sd_out = std::sqrt(inter_pairs * p_out * (1 - p_out));
  CHECK(std::abs(intra - mu_in) <= 3 * sd_in);
  CHECK(std::abs(inter - mu_out) <= 3 * sd_out);
  const double frac = static_cast<double>(intra) / static_cast<double>(intra + inter);
  const double expected_frac = mu_in / (mu_in + mu_out);
  CHECK(std::abs(frac - expected_frac) < 0.05);
}

TEST_CASE("synth_tag: stratified 60/20/20 split per class") {
  auto tag = synth_tag(small_spec(4, 125, 0.05, 0.005), 3);
  for (std::int32_t c = 0; c < 4; ++c) {
    std::size_t tr = 0, va = 0, te = 0;
    for (std::size_t i = 0; i < tag.num_nodes(); ++i) {
      if (tag.labels[i] != c) continue;
      (tag.split[i] == Split::train ? tr : tag.split[i] == Split::valid ? va : te) += 1;
    }
    CHECK(tr == 75);
    CHECK(va == 25);
    CHECK(te == 25);
  }
}

TEST_CASE("synth_tag: node text is drawn from its class bag and the noise vocabulary") {
  auto spec = small_spec(3, 10, 0.5, 0.1);
  auto tag = synth_tag(spec, 7);
  auto lex = make_lexicon(spec.classes, spec.vocab, 7);
  std::set<std::string> noise(lex.noise_words.begin(), lex.noise_words.end());
  for (std::size_t i = 0; i < tag.num_nodes(); ++i) {
    const auto& bag = lex.class_words[tag.labels[i]];
    std::set<std::string> own(bag.begin(), bag.end());
    std::size_t words = 0;
    std::string w;
    std::istringstream in(tag.texts[i]);
    while (in >> w) {
      ++words;
      CHECK((own.count(w) || noise.count(w)));
    }
    CHECK(words == spec.vocab.tokens_per_node);
  }
}

TEST_CASE("make_edge_split: triangle with one test edge keeps two training edges") {
  auto tag = parse_tag(plain_nodes(3), "0 1\n1 2\n0 2\n");
  // A triangle has no non-edges, so negatives need a spare node.
  auto tag4 = parse_tag(plain_nodes(4), "0 1\n1 2\n0 2\n");
  CHECK_THROWS_AS(make_edge_split(tag, {2.0 / 3, 0, 1.0 / 3}, 1, 1), ValidationError);
  auto s = make_edge_split(tag4, {2.0 / 3, 0, 1.0 / 3}, 1, 1);
  CHECK(s.test.size() == 1);
  CHECK(s.train.size() == 2);
  auto train_tag = with_edges(tag4, s.train);
  CHECK(train_tag.graph.num_edges() == 2);
  CHECK_FALSE(train_tag.graph.has_edge(s.test[0].u, s.test[0].v));
}

TEST_CASE("make_edge_split: negatives on a 4-node graph are non-edges") {
  auto tag = parse_tag(plain_nodes(4), "0 1\n1 2\n2 3\n");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = make_edge_split(tag, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1, seed);
    for (const auto* lists : {&s.valid_negatives, &s.test_negatives})
      for (const auto& l : *lists) {
        REQUIRE(l.size() == 1);
        CHECK_FALSE(tag.graph.has_edge(l[0].u, l[0].v));
        CHECK(l[0].u < l[0].v);
      }
  }
}

TEST_CASE("make_edge_split: 0.8/0.1/0.1 on 1000 edges gives exactly 100 test edges") {
  // Trim a synthetic graph to exactly 1000 edges.
  auto tag = synth_tag(small_spec(4, 125, 0.08, 0.005), 11);
  auto edges = tag.graph.edges();
  REQUIRE(edges.size() >= 1000);
  edges.resize(1000);
  auto g = with_edges(tag, edges);
  REQUIRE(g.graph.num_edges() == 1000);
  auto s = make_edge_split(g, {0.8, 0.1, 0.1}, 5, 3);
  CHECK(s.test.size() == 100);
  CHECK(s.valid.size() == 100);
  CHECK(s.train.size() == 800);

  // Partition: union is the edge set and the parts are disjoint.
  std::set<Edge> all;
  for (const auto* part : {&s.train, &s.valid, &s.test})
    for (const auto& e : *part) CHECK(all.insert(e).second);
  CHECK(all == std::set<Edge>(edges.begin(), edges.end()));

  // Negatives: K per positive, duplicate-free, never an edge.
  for (const auto* lists : {&s.valid_negatives, &s.test_negatives})
    for (const auto& l : *lists) {
      CHECK(l.size() == 5);
      CHECK(std::set<Edge>(l.begin(), l.end()).size() == 5);
      for (const auto& e : l) CHECK_FALSE(g.graph.has_edge(e.u, e.v));
    }

  CHECK(parse_edge_split(serialize_edge_split(s)) == s);
  CHECK(make_edge_split(g, {0.8, 0.1, 0.1}, 5, 3) == s);
}

TEST_CASE("make_edge_split: too few edges is an error") {
  auto tag = parse_tag(plain_nodes(5), "0 1\n");
  CHECK_THROWS_AS(make_edge_split(tag, {0.8, 0.1, 0.1}, 1, 1), ValidationError);
  CHECK_THROWS_AS(make_edge_split(tag, {0.8, 0.1, 0.1}, 0, 1), ValidationError);
}

TEST_CASE("bfs_khop: radius, order and cap") {
  // Path 0-1-2-3-4 plus a branch 1-5.
  CsrGraph g(6, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 5}});
  std::vector<NodeId> src{0};
  auto r = bfs_khop(g, src, 2);
  CHECK(r.nodes == std::vector<NodeId>{0, 1, 2, 5});
  CHECK(r.hop == std::vector<std::int32_t>{0, 1, 2, 2});
  auto capped = bfs_khop(g, src, 4, 3);
  CHECK(capped.nodes == std::vector<NodeId>{0, 1, 2});
  std::vector<NodeId> two{4, 0};
  CHECK(bfs_khop(g, two, 1).nodes == std::vector<NodeId>{4, 0, 3, 1});
  auto sub = induced_edges(g, r.nodes);
  CHECK(sub == std::vector<Edge>{{0, 1}, {1, 2}, {1, 3}});
}

TEST_CASE("GEMB round trip is bit exact and the header layout is fixed") {
  Rng rng(1);
  std::vector<float> data(7 * 5);
  for (auto& v : data) v = static_cast<float>(rng.normal());
  EmbeddingTable t(7, 5, data, "test");
  auto bytes = encode_gemb(t);
  REQUIRE(bytes.size() == 4 + 4 + 8 + 4 + 7 * 5 * 4);
  CHECK(bytes.substr(0, 4) == "GEMB");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 7);
  CHECK(static_cast<unsigned char>(bytes[16]) == 5);
  auto back = decode_gemb(bytes);
  CHECK(back == t);
  CHECK(std::memcmp(back.data().data(), data.data(), data.size() * 4) == 0);
  auto dir = scratch_dir("gemb");
  save_gemb(t, dir / "e.gemb");
  CHECK(load_gemb(dir / "e.gemb") == t);
  CHECK_THROWS_AS(decode_gemb(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(decode_gemb("NOPE" + bytes.substr(4)), ParseError);
  CHECK_THROWS_AS(EmbeddingTable(2, 2, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(EmbeddingTable(1, 2, {1, NAN}), ValidationError);
}
