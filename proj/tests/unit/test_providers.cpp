#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <thread>

#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/graph/synth.hpp"
#include "gaga/providers/annotate.hpp"
#include "gaga/providers/embedder.hpp"
#include "gaga/providers/prompt.hpp"
#include "../support/oracles.hpp"

using namespace gaga;
using namespace gaga::providers;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const Fields& kSampleFields = testing::sample_prompt_fields();

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gaga_test_providers_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i], na += a[i] * a[i], nb += b[i] * b[i];
  return d / std::sqrt(na * nb);
}

// Local OpenAI-shaped server. `handler` gets the prompt (or the input list
// for embeddings) and the per-prompt attempt count.
class FakeServer {
 public:
  using ChatFn = std::function<std::pair<int, std::string>(const std::string& prompt, int attempt)>;
  explicit FakeServer(ChatFn chat) : chat_(std::move(chat)) {
    svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const auto prompt = body["messages"][0]["content"].get<std::string>();
      int attempt;
      {
        std::lock_guard lock(mu_);
        attempt = ++attempts_[prompt];
        ++requests_;
      }
      auto [status, content] = chat_(prompt, attempt);
      res.status = status;
      if (status == 200)
        res.set_content(json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump(),
                        "application/json");
      else
        res.set_content(content, "text/plain");
    });
    svr_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json data = json::array();
      std::size_t i = 0;
      for (const auto& t : body["input"]) {
        HashEmbedder h(embed_dim);
        data.push_back({{"index", i++}, {"embedding", h.embed_one(t.get<std::string>())}});
      }
      {
        std::lock_guard lock(mu_);
        ++requests_;
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~FakeServer() {
    svr_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  int attempts(const std::string& prompt) {
    std::lock_guard lock(mu_);
    return attempts_[prompt];
  }
  std::size_t embed_dim = 16;

 private:
  ChatFn chat_;
  httplib::Server svr_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::map<std::string, int> attempts_;
  int requests_ = 0;
};

RetryPolicy fast_retry() {
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(1);
  p.timeout = std::chrono::seconds(5);
  return p;
}

std::vector<AnnotationRequest> numbered_requests(std::size_t n) {
  std::vector<AnnotationRequest> reqs;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotationRequest r;
    r.target = {select::ItemKind::node, static_cast<graph::NodeId>(i), 0};
    r.prompt = "prompt number " + std::to_string(i);
    reqs.push_back(r);
  }
  return reqs;
}

}  // namespace

TEST_CASE("every built-in template renders byte-identically to its golden fixture") {
  const auto ids = builtin_template_ids();
  CHECK(ids.size() == 7);
  for (const auto& id : ids) {
    CAPTURE(id);
    const auto golden = io::read_file(fs::path(GAGA_SOURCE_DIR) / "tests/fixtures/prompts" / (id + ".txt"));
    CHECK(render_prompt(builtin_template(id), kSampleFields) == golden);
  }
}

TEST_CASE("arxiv template puts the abstract before the title") {
  const auto out = render_prompt(builtin_template("arxiv"), {{"title", "T"}, {"abstract", "A"}});
  const auto a = out.find("Abstract: A"), t = out.find("Title: T");
  REQUIRE(a != std::string::npos);
  REQUIRE(t != std::string::npos);
  CHECK(a < t);
  CHECK(out.find("Give 5 likely arXiv CS sub-categories") != std::string::npos);
}

TEST_CASE("link template asks why two papers are related") {
  const auto out = render_prompt(builtin_template("link"), edge_fields("Paper one\nabs one", "Paper two\nabs two"));
  CHECK(out.find("Why are these two papers related?") != std::string::npos);
  CHECK(out.find("Title: Paper one Abstract: abs one") != std::string::npos);
}

TEST_CASE("render_prompt: empty field is fine, missing field is an error") {
  auto out = render_prompt(builtin_template("arxiv"), {{"title", "T"}, {"abstract", ""}});
  CHECK(out.rfind("Abstract:  Title: T", 0) == 0);
  CHECK_THROWS_AS(render_prompt(builtin_template("arxiv"), {{"title", "T"}}), ValidationError);
  CHECK_THROWS_AS(builtin_template("nope"), ValidationError);
  PromptTemplate odd{"odd", "x {unbound} y", {}, false};
  CHECK_THROWS_AS(render_prompt(odd, {}), ValidationError);
}

TEST_CASE("node_fields splits title and abstract on the first newline") {
  auto f = node_fields("Title line\nrest of\ntext", "c1, c2");
  CHECK(f["title"] == "Title line");
  CHECK(f["abstract"] == "rest of\ntext");
  CHECK(f["categories"] == "c1, c2");
  CHECK(node_fields("single")["abstract"].empty());
}

TEST_CASE("hash embedder: deterministic, normalized, case-insensitive") {
  HashEmbedder h(64);
  std::vector<std::string> texts{"alpha beta gamma", "alpha beta gamma", "ALPHA, beta; gamma!", ""};
  auto t = h.embed(texts);
  CHECK(t.count() == 4);
  CHECK(t.dim() == 64);
  CHECK(std::equal(t.row(0).begin(), t.row(0).end(), t.row(1).begin()));
  CHECK(std::equal(t.row(0).begin(), t.row(0).end(), t.row(2).begin()));
  double n = 0;
  for (float v : t.row(0)) n += v * v;
  CHECK(n == doctest::Approx(1.0));
  for (float v : t.row(3)) CHECK(v == 0.0f);
  CHECK_THROWS_AS(h.embed({}), ContractError);
}

TEST_CASE("hash embedder: heavy token overlap beats disjoint text on 1000 synthetic trials") {
  const auto lex = graph::make_lexicon(4, graph::VocabSpec{}, 3);
  std::vector<std::string> vocab = lex.noise_words;
  for (const auto& bag : lex.class_words) vocab.insert(vocab.end(), bag.begin(), bag.end());
  HashEmbedder h(64);
  Rng rng(99);
  int wins = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    rng.shuffle(vocab.begin(), vocab.end());
    // a uses words [0, 20); b keeps 16 of them and swaps 4; c uses [40, 60).
    std::string a, b, c;
    for (int i = 0; i < 20; ++i) {
      a += vocab[i] + " ";
      b += (i < 16 ? vocab[i] : vocab[20 + i]) + " ";
      c += vocab[40 + i] + " ";
    }
    const auto ea = h.embed_one(a), eb = h.embed_one(b), ec = h.embed_one(c);
    wins += cosine(ea, eb) > cosine(ea, ec);
  }
  CHECK(wins == 1000);
}

TEST_CASE("file embedder returns the stored rows exactly") {
  auto dir = scratch("file");
  std::vector<float> data{0.5f, -1.25f, 3.0f, 1e-7f, 2.0f, 4.0f};
  graph::EmbeddingTable table(3, 2, data);
  graph::save_gemb(table, dir / "x.gemb");
  FileEmbedder f(dir / "x.gemb", 2);
  std::vector<std::string> texts{"a", "b", "c"};
  CHECK(f.embed(texts) == table);
  CHECK_THROWS_AS(f.embed(std::vector<std::string>{"a"}), ShapeError);
  CHECK_THROWS_AS(FileEmbedder(dir / "x.gemb", 3), ValidationError);
  CHECK_THROWS_AS(FileEmbedder(dir / "missing.gemb"), MissingArtifactError);
}

TEST_CASE("mock annotator: pure in (text, label, seed) and grounded in the class bag") {
  const auto lex = graph::make_lexicon(4, graph::VocabSpec{}, 1);
  MockAnnotator m(lex, 5);
  AnnotationRequest r;
  r.target = {select::ItemKind::node, 3, 0};
  r.texts = {"some node text words here"};
  r.labels = {2};
  const auto a = m.complete(r);
  CHECK(m.complete(r) == a);
  MockAnnotator again(lex, 5);
  CHECK(again.complete(r) == a);
  std::size_t hits = 0;
  for (const auto& w : lex.class_words[2]) hits += a.find(w) != std::string::npos;
  CHECK(hits >= 6);
  r.labels = {1};
  CHECK(m.complete(r) != a);
  MockAnnotator other(lex, 6);
  r.labels = {2};
  CHECK(other.complete(r) != a);
}

TEST_CASE("annotate: second run is served from cache with identical records") {
  const auto lex = graph::make_lexicon(3, graph::VocabSpec{}, 2);
  graph::SynthSpec spec;
  spec.classes = 3;
  spec.nodes_per_class = 10;
  spec.p_in = 0.3;
  spec.p_out = 0.01;
  auto tag = graph::synth_tag(spec, 2);
  auto sel = select::top_nodes(std::vector<double>(tag.num_nodes(), 0.5), 6);
  auto reqs = build_requests(tag, sel, builtin_template("generic"), "topic 0, topic 1, topic 2");
  REQUIRE(reqs.size() == 6);

  auto dir = scratch("cache");
  MockAnnotator mock(lex, 2);
  AnnotateResult first, second;
  {
    JsonlCache cache(dir / "annotations.cache.jsonl");
    first = annotate(reqs, mock, cache);
  }
  CHECK(first.records.size() == 6);
  CHECK(first.ledger.remote_calls == 6);
  CHECK(first.ledger.prompt_tokens > 0);
  {
    JsonlCache cache(dir / "annotations.cache.jsonl");
    second = annotate(reqs, mock, cache);
  }
  CHECK(second.ledger.remote_calls == 0);
  CHECK(second.ledger.cache_hits == 6);
  CHECK(serialize_records(second.records) == serialize_records(first.records));
  CHECK(parse_records(serialize_records(first.records)) == first.records);
  for (std::size_t i = 0; i < 6; ++i) CHECK(first.records[i].target.u == sel.nodes[i]);
  CHECK_THROWS_AS(annotate({}, mock, *std::make_unique<JsonlCache>()), ContractError);
}

TEST_CASE("annotate over HTTP: one permanent failure among ten targets") {
  FakeServer server([](const std::string& prompt, int) -> std::pair<int, std::string> {
    if (prompt == "prompt number 7") return {503, "overloaded"};
    return {200, "answer to " + prompt};
  });
  HttpChatAnnotator chat(server.url("/v1/chat/completions"), "test-model", 0.0, "key", fast_retry());
  JsonlCache cache;
  auto reqs = numbered_requests(10);
  auto res = annotate(reqs, chat, cache, AnnotateOptions{3, 1.0, 2.0});
  CHECK(res.records.size() == 9);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].target.u == 7);
  CHECK(res.failures[0].http_status == 503);
  CHECK(server.attempts("prompt number 7") == 4);  // first try plus three retries
  for (std::size_t i = 0, r = 0; i < 10; ++i) {
    if (i == 7) continue;
    CHECK(res.records[r].target.u == static_cast<graph::NodeId>(i));
    CHECK(res.records[r].annotation_text == "answer to prompt number " + std::to_string(i));
    ++r;
  }
  CHECK(res.ledger.cost > 0);
  CHECK(serialize_failures(res.failures).find("\"http_status\": 503") != std::string::npos);

  // Cached records need no further requests; the failed one is retried.
  const auto before = server.requests();
  auto again = annotate(reqs, chat, cache);
  CHECK(again.ledger.cache_hits == 9);
  CHECK(server.requests() - before == 4);
}

TEST_CASE("annotate over HTTP: transient errors recover, client errors and empty completions fail fast") {
  FakeServer server([](const std::string& prompt, int attempt) -> std::pair<int, std::string> {
    if (prompt == "prompt number 0") return attempt < 3 ? std::pair<int, std::string>{429, "slow down"}
                                                        : std::pair<int, std::string>{200, "finally"};
    if (prompt == "prompt number 1") return {400, "bad request"};
    return {200, "   "};
  });
  HttpChatAnnotator chat(server.url("/v1/chat/completions"), "m", 0.0, "", fast_retry());
  JsonlCache cache;
  auto res = annotate(numbered_requests(3), chat, cache, AnnotateOptions{1, 0, 0});
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].annotation_text == "finally");
  CHECK(server.attempts("prompt number 0") == 3);
  CHECK(server.attempts("prompt number 1") == 1);
  REQUIRE(res.failures.size() == 2);
  CHECK(res.failures[0].http_status == 400);
  CHECK(res.failures[1].error.find("empty completion") != std::string::npos);
}

TEST_CASE("unreachable endpoint surfaces a provider error with status 0") {
  RetryPolicy p = fast_retry();
  p.max_retries = 1;
  p.timeout = std::chrono::seconds(1);
  int attempts = 0;
  try {
    post_json_with_retry("http://127.0.0.1:1/v1/chat/completions", "{}", "", p, &attempts);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.http_status() == 0);
  }
  CHECK(attempts == 2);
}

TEST_CASE("HTTP embedder: batches, caches by text and checks the declared dim") {
  FakeServer server([](const std::string&, int) { return std::pair<int, std::string>{200, "x"}; });
  auto cache = std::make_shared<JsonlCache>();
  HttpEmbedder e(server.url("/v1/embeddings"), "m", 16, "", cache, fast_retry(), 2);
  std::vector<std::string> texts{"one", "two", "three", "one"};
  auto t = e.embed(texts);
  CHECK(t.count() == 4);
  CHECK(e.remote_calls() == 2);  // three distinct texts, batch of two
  HashEmbedder h(16);
  auto expect = h.embed_one("three");
  CHECK(std::equal(expect.begin(), expect.end(), t.row(2).begin()));
  e.embed(texts);
  CHECK(e.remote_calls() == 2);
  HttpEmbedder wrong(server.url("/v1/embeddings"), "m", 8, "", nullptr, fast_retry());
  CHECK_THROWS_AS(wrong.embed(texts), ProviderError);
}
