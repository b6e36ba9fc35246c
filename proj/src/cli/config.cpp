#include "gaga/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "gaga/common/error.hpp"
#include "gaga/common/hash.hpp"

namespace gaga::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ValidationError("config key '" + std::string(key) + "' = '" + std::string(value) + "': " + std::string(why));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0;
  const auto s = std::string(v);
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(key, v, "not a number");
  }
  if (used != s.size() || !std::isfinite(out)) bad(key, v, "not a finite number");
  return out;
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "not an integer");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

template <typename T>
ConfigKey real(std::string name, T RunConfig::*field, double lo, double hi, std::string prov, std::string help,
               bool lo_open = false) {
  return {name, std::move(prov), std::move(help), [field](const RunConfig& c) { return fmt_double(c.*field); },
          [=](RunConfig& c, std::string_view v) {
            const double x = to_double(name, v);
            if (x < lo || x > hi || (lo_open && x == lo))
              bad(name, v, "outside " + std::string(lo_open ? "(" : "[") + fmt_double(lo) + ", " + fmt_double(hi) + "]");
            c.*field = static_cast<T>(x);
          }};
}

template <typename T>
ConfigKey integer(std::string name, T RunConfig::*field, std::int64_t lo, std::int64_t hi, std::string prov,
                  std::string help) {
  return {name, std::move(prov), std::move(help), [field](const RunConfig& c) { return std::to_string(c.*field); },
          [=](RunConfig& c, std::string_view v) {
            const auto x = to_int(name, v);
            if (x < lo || x > hi) bad(name, v, "outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            c.*field = static_cast<T>(x);
          }};
}

ConfigKey text(std::string name, std::string RunConfig::*field, std::vector<std::string> choices, std::string prov,
               std::string help) {
  return {name, std::move(prov), std::move(help), [field](const RunConfig& c) { return c.*field; },
          [=](RunConfig& c, std::string_view v) {
            if (v.find('\n') != std::string_view::npos) bad(name, "...", "values are single-line");
            if (!choices.empty()) {
              bool ok = false;
              for (const auto& ch : choices) ok |= ch == v;
              if (!ok) {
                std::string all;
                for (const auto& ch : choices) all += (all.empty() ? "" : "|") + ch;
                bad(name, v, "expected " + all);
              }
            }
            c.*field = std::string(v);
          }};
}

ConfigKey boolean(std::string name, bool RunConfig::*field, std::string prov, std::string help) {
  return {name, std::move(prov), std::move(help), [field](const RunConfig& c) { return c.*field ? "true" : "false"; },
          [=](RunConfig& c, std::string_view v) {
            if (v == "true" || v == "1") c.*field = true;
            else if (v == "false" || v == "0") c.*field = false;
            else bad(name, v, "expected true or false");
          }};
}

const std::string kArtifact = "artifact default";
const std::string kSetup = "experimental setup";

std::vector<ConfigKey> build_keys() {
  constexpr std::int64_t big = 1'000'000'000;
  using C = RunConfig;
  return {
      text("task", &C::task, {"node", "link"}, kArtifact, "downstream task"),
      text("nodes_file", &C::nodes_file, {}, kArtifact, "node JSONL of a TAG on disk (empty: synthetic)"),
      text("edges_file", &C::edges_file, {}, kArtifact, "edge list of a TAG on disk"),
      integer("synth_classes", &C::synth_classes, 2, 1000, kArtifact, "synthetic TAG: classes"),
      integer("synth_nodes_per_class", &C::synth_nodes_per_class, 2, 100000, kArtifact, "synthetic TAG: nodes per class"),
      real("synth_p_in", &C::synth_p_in, 0, 1, kArtifact, "synthetic TAG: edge probability inside a class"),
      real("synth_p_out", &C::synth_p_out, 0, 1, kArtifact, "synthetic TAG: edge probability across classes"),
      integer("synth_keywords", &C::synth_keywords, 1, 10000, kArtifact, "synthetic TAG: keywords per class"),
      integer("synth_noise_words", &C::synth_noise_words, 1, 100000, kArtifact, "synthetic TAG: shared noise words"),
      integer("synth_tokens", &C::synth_tokens, 1, 10000, kArtifact, "synthetic TAG: tokens per node text"),
      real("synth_keyword_fraction", &C::synth_keyword_fraction, 0, 1, kArtifact,
           "synthetic TAG: share of tokens drawn from the class keywords"),
      integer("seed", &C::seed, 0, std::numeric_limits<std::int64_t>::max(), kArtifact, "run seed"),
      real("node_fraction", &C::node_fraction, 0, 1, kSetup + " (1% of nodes annotated)", "node annotation budget",
           true),
      integer("edge_budget", &C::edge_budget, 0, big, kSetup + " (ceil(sqrt(edges)); 0 selects it)",
              "edge annotation budget"),
      integer("clusters", &C::clusters, 1, big, kSetup + " (40 clusters)", "k-means clusters for selection"),
      text("prompt_template", &C::prompt_template, {"generic", "arxiv", "arxiv2023", "cora", "pubmed", "products", "link"},
           kSetup + " (per-dataset annotation prompts)", "annotation prompt template"),
      text("categories", &C::categories, {}, kArtifact, "category list offered to category-style prompts"),
      text("annotator", &C::annotator, {"mock", "http"}, kArtifact, "annotation provider"),
      text("llm_endpoint", &C::llm_endpoint, {}, kArtifact, "chat completions URL (GAGA_LLM_ENDPOINT overrides)"),
      text("llm_model", &C::llm_model, {}, kArtifact, "chat model name"),
      real("temperature", &C::temperature, 0, 2, kArtifact, "sampling temperature"),
      integer("parallelism", &C::parallelism, 1, 256, kArtifact, "concurrent annotation requests"),
      real("price_prompt", &C::price_prompt, 0, 1e6, kArtifact, "price per 1k prompt tokens"),
      real("price_completion", &C::price_completion, 0, 1e6, kArtifact, "price per 1k completion tokens"),
      text("cache_dir", &C::cache_dir, {}, kArtifact, "provider cache directory (GAGA_CACHE_DIR overrides)"),
      text("embedder", &C::embedder, {"hash", "file", "http"}, kArtifact, "text embedding provider"),
      integer("embed_dim", &C::embed_dim, 1, 100000, kArtifact, "embedding width"),
      text("embed_file", &C::embed_file, {}, kArtifact, "GEMB file with node embeddings (embedder=file)"),
      text("anno_embed_file", &C::anno_embed_file, {}, kArtifact, "GEMB file with annotation embeddings (embedder=file)"),
      text("embed_endpoint", &C::embed_endpoint, {}, kArtifact, "embeddings URL (GAGA_EMBED_ENDPOINT overrides)"),
      text("embed_model", &C::embed_model, {}, kArtifact, "embedding model name"),
      integer("knn", &C::knn, 1, big, kArtifact + " (no published value for k')", "annotation graph neighbours k'"),
      integer("hops", &C::hops, 0, 100, kSetup + " (2-hop subgraphs)", "subgraph radius"),
      integer("anno_hops", &C::anno_hops, -1, 100, kArtifact, "annotation-side subgraph radius (-1: same as hops)"),
      integer("node_cap", &C::node_cap, 1, big, kArtifact, "subgraph node cap"),
      real("alpha", &C::alpha, 0, 1, kSetup + " (alpha = 0.6)", "prototype vs pair alignment weight"),
      integer("kp", &C::kp, 1, 1'000'000, kSetup + " (k_p = 40)", "number of prototypes"),
      real("gamma", &C::gamma, 0, 0.999999, kArtifact, "codebook EMA decay"),
      integer("hidden", &C::hidden, 1, 100000, kArtifact, "GCN hidden width"),
      integer("layers", &C::layers, 1, 64, kSetup + " (4-layer GCN)", "GCN layers"),
      real("lr_align", &C::lr_align, 0, 10, kSetup + " (5e-5 for alignment)", "alignment learning rate", true),
      integer("align_epochs", &C::align_epochs, 0, big, kArtifact, "alignment epochs"),
      integer("batch", &C::batch, 2, big, kArtifact, "alignment batch size"),
      real("lr_finetune", &C::lr_finetune, 0, 10, kSetup + " (1e-3 for fine-tuning)", "fine-tuning learning rate", true),
      integer("finetune_epochs", &C::finetune_epochs, 0, big, kArtifact, "maximum fine-tuning epochs"),
      integer("patience", &C::patience, 1, big, kArtifact, "early-stopping patience"),
      real("label_rate", &C::label_rate, 0, 1, kArtifact, "share of training labels used for fine-tuning", true),
      boolean("residual", &C::residual, kArtifact, "add node embeddings to the attention output"),
      real("query_scale", &C::query_scale, 0, 1000, kArtifact, "initial scale of the query projection"),
      boolean("baseline", &C::baseline, kArtifact, "fine-tune the untrained encoder with a random codebook"),
      real("valid_fraction", &C::valid_fraction, 0, 1, kArtifact, "link task: validation edge share", true),
      real("test_fraction", &C::test_fraction, 0, 1, kArtifact, "link task: test edge share", true),
      integer("negatives", &C::negatives, 1, big, kArtifact, "link task: negatives per evaluation edge"),
  };
}

Stage owning_stage(std::string_view key) {
  static const std::vector<std::pair<Stage, std::vector<std::string_view>>> owners = {
      {Stage::synth,
       {"task", "nodes_file", "edges_file", "synth_classes", "synth_nodes_per_class", "synth_p_in", "synth_p_out",
        "synth_keywords", "synth_noise_words", "synth_tokens", "synth_keyword_fraction", "seed", "valid_fraction",
        "test_fraction", "negatives"}},
      {Stage::select, {"node_fraction", "edge_budget", "clusters", "embedder", "embed_dim", "embed_file",
                       "embed_endpoint", "embed_model"}},
      {Stage::annotate, {"prompt_template", "categories", "annotator", "llm_endpoint", "llm_model", "temperature"}},
      {Stage::anno_graph, {"anno_embed_file", "knn"}},
      {Stage::align, {"hops", "anno_hops", "node_cap", "alpha", "kp", "gamma", "hidden", "layers", "lr_align",
                      "align_epochs", "batch", "baseline"}},
      {Stage::finetune, {"lr_finetune", "finetune_epochs", "patience", "label_rate", "residual", "query_scale"}},
  };
  for (const auto& [stage, keys] : owners)
    for (auto k : keys)
      if (k == key) return stage;
  return Stage::none;
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::synth: return "synth";
    case Stage::select: return "select";
    case Stage::annotate: return "annotate";
    case Stage::anno_graph: return "build-anno-graph";
    case Stage::align: return "align";
    case Stage::finetune: return "finetune";
    case Stage::evaluate: return "evaluate";
    case Stage::none: return "none";
  }
  return "none";
}

Stage parse_stage(std::string_view s) {
  for (auto st : kAllStages)
    if (stage_name(st) == s) return st;
  throw ValidationError("unknown stage '" + std::string(s) + "'");
}

const std::vector<ConfigKey>& config_keys() {
  static const auto keys = [] {
    auto k = build_keys();
    for (auto& key : k) key.stage = owning_stage(key.name);
    return k;
  }();
  return keys;
}

std::string config_hash(const RunConfig& cfg, Stage stage) {
  std::string text = "schema_version = " + std::to_string(kSchemaVersion) + "\n";
  for (const auto& k : config_keys())
    if (k.stage != Stage::none && k.stage <= stage) text += k.name + " = " + k.get(cfg) + "\n";
  return sha256_hex(text);
}

const ConfigKey& config_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return k;
  throw ValidationError("unknown config key '" + std::string(name) + "'");
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) { config_key(key).set(cfg, value); }

void validate(const RunConfig& cfg) {
  if (cfg.nodes_file.empty() != cfg.edges_file.empty())
    throw ValidationError("nodes_file and edges_file must be given together");
  if (cfg.task == "link" && cfg.valid_fraction + cfg.test_fraction >= 1.0)
    throw ValidationError("valid_fraction + test_fraction must be below 1");
  if (cfg.annotator == "mock" && !cfg.synthetic())
    throw ValidationError("the mock annotator needs the synthetic TAG's lexicon; use annotator = http");
  if (cfg.embedder == "file" && (cfg.embed_file.empty() || cfg.anno_embed_file.empty()))
    throw ValidationError("embedder = file needs embed_file and anno_embed_file");
  if (cfg.task == "link" && cfg.prompt_template != "link")
    throw ValidationError("task = link annotates edges and needs prompt_template = link");
  if (cfg.task == "node" && cfg.prompt_template == "link")
    throw ValidationError("the link template describes node pairs; task = node needs a node template");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool versioned = false;
  std::size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line_no);
    if (key == "schema_version") {
      if (value != std::to_string(kSchemaVersion))
        throw ValidationError("unsupported schema_version " + value + " (expected " + std::to_string(kSchemaVersion) + ")");
      versioned = true;
      continue;
    }
    try {
      set_value(cfg, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  if (!versioned) throw ValidationError("config file lacks schema_version");
  validate(cfg);
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out = "schema_version = " + std::to_string(kSchemaVersion) + "\n";
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace gaga::cli
