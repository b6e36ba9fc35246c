#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gaga::cli {

inline constexpr int kSchemaVersion = 1;

// Every setting of a run. Files hold `key = value` lines; flags override
// file values.
struct RunConfig {
  std::string task = "node";  // node | link

  // Data: both paths set loads a TAG from disk; otherwise a synthetic TAG.
  std::string nodes_file, edges_file;
  int synth_classes = 4;
  int synth_nodes_per_class = 125;
  double synth_p_in = 0.05;
  double synth_p_out = 0.005;
  int synth_keywords = 12;
  int synth_noise_words = 200;
  int synth_tokens = 24;
  double synth_keyword_fraction = 0.25;

  std::uint64_t seed = 0;

  // Selection and annotation.
  double node_fraction = 0.01;
  std::size_t edge_budget = 0;  // 0 means ceil(sqrt(training edges))
  std::size_t clusters = 40;
  std::string prompt_template = "generic";
  std::string categories;
  std::string annotator = "mock";  // mock | http
  std::string llm_endpoint = "https://api.openai.com/v1/chat/completions";
  std::string llm_model = "gpt-4o-mini";
  double temperature = 0.0;
  std::size_t parallelism = 4;
  double price_prompt = 0.0;  // per 1k tokens
  double price_completion = 0.0;
  std::string cache_dir;

  // Embeddings.
  std::string embedder = "hash";  // hash | file | http
  std::size_t embed_dim = 64;
  std::string embed_file, anno_embed_file;
  std::string embed_endpoint = "https://api.openai.com/v1/embeddings";
  std::string embed_model = "text-embedding-3-small";

  // Annotation graph and alignment.
  std::size_t knn = 5;
  int hops = 2;
  int anno_hops = -1;
  std::size_t node_cap = 256;
  double alpha = 0.6;
  std::size_t kp = 40;
  double gamma = 0.99;
  std::size_t hidden = 64;
  std::size_t layers = 4;
  double lr_align = 5e-5;
  std::size_t align_epochs = 200;
  std::size_t batch = 32;

  // Fine-tuning.
  double lr_finetune = 1e-3;
  std::size_t finetune_epochs = 200;
  std::size_t patience = 20;
  double label_rate = 1.0;
  bool residual = false;
  double query_scale = 1.0;
  bool baseline = false;  // skip alignment: initial encoder + random codebook

  // Link splits.
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::size_t negatives = 50;

  bool synthetic() const { return nodes_file.empty() && edges_file.empty(); }
};

// Pipeline stages in execution order. A key belongs to the first stage whose
// output it changes; `none` marks keys that never change an artifact.
enum class Stage { synth, select, annotate, anno_graph, align, finetune, evaluate, none };

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view s);  // ValidationError on unknown names
inline constexpr Stage kAllStages[] = {Stage::synth,    Stage::select,   Stage::annotate, Stage::anno_graph,
                                       Stage::align,    Stage::finetune, Stage::evaluate};

struct ConfigKey {
  std::string name;
  std::string provenance;  // where the default comes from
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  // Parses and range-checks; throws ValidationError.
  std::function<void(RunConfig&, std::string_view)> set;
  Stage stage = Stage::none;
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey& config_key(std::string_view name);  // ValidationError if unknown

// Unknown keys, duplicate keys, a missing or different schema_version and
// out-of-range values raise ValidationError / ParseError.
RunConfig parse_config(std::string_view text);
// Every key, in registry order, after the schema_version line.
std::string serialize_config(const RunConfig& cfg);
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);
// Cross-field checks (e.g. both data paths or neither).
void validate(const RunConfig& cfg);

// SHA-256 over the keys that feed `stage` and every stage before it.
std::string config_hash(const RunConfig& cfg, Stage stage);

}  // namespace gaga::cli
