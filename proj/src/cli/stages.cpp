#include "gaga/cli/stages.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gaga/align/align_train.hpp"
#include "gaga/annograph/annotation_graph.hpp"
#include "gaga/common/error.hpp"
#include "gaga/common/hash.hpp"
#include "gaga/common/io.hpp"
#include "gaga/common/log.hpp"
#include "gaga/downstream/finetune.hpp"
#include "gaga/graph/edge_split.hpp"
#include "gaga/graph/synth.hpp"
#include "gaga/providers/annotate.hpp"
#include "gaga/providers/annotator.hpp"
#include "gaga/providers/cache.hpp"
#include "gaga/providers/embedder.hpp"
#include "gaga/providers/prompt.hpp"
#include "gaga/select/kmeans.hpp"
#include "gaga/select/selection.hpp"
#include "gaga/tensor/checkpoint.hpp"

namespace gaga::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingArtifactError*>(&e)) return kExitMissing;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const DegenerateInputError*>(&e))
    return kExitValidation;
  if (dynamic_cast<const ProviderError*>(&e)) return kExitProvider;
  return kExitInternal;
}

RunLock::RunLock(const fs::path& out_dir) : path_(out_dir / ".gaga.lock") {
  fs::create_directories(out_dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const auto pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw Error("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    long owner = 0;
    std::ifstream(path_) >> owner;
    if (owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno == EPERM))
      throw ValidationError("output directory " + out_dir.string() + " is in use by process " +
                            std::to_string(owner) + " (" + path_.string() + ")");
    log::warn("removing stale lock " + path_.string());
    fs::remove(path_);
  }
  throw ValidationError("could not lock " + out_dir.string());
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

// Artifact locations relative to the output directory.
namespace path {
const fs::path nodes = "tag/nodes.jsonl";
const fs::path edges = "tag/edges.txt";
const fs::path edge_split = "edge_split.json";
const fs::path features = "features.gemb";
const fs::path selection = "selection.jsonl";
const fs::path annotations = "annotations.jsonl";
const fs::path failures = "annotation_failures.jsonl";
const fs::path cost = "annotation_cost.json";
const fs::path anno_features = "anno_features.gemb";
const fs::path anno_graph = "anno_graph";
const fs::path alignment = "alignment";
const fs::path model = "model";
const fs::path history = "history.csv";
const fs::path finetune_report = "finetune_report.json";
const fs::path runtime = "runtime.json";
const fs::path eval_report = "eval_report.json";
const fs::path prototypes = "prototype_distances.csv";
const fs::path stamps = "stamps";
const fs::path manifest = "manifest.json";
}  // namespace path

bool is_link(const RunConfig& cfg) { return cfg.task == "link"; }

fs::path stamp_path(const fs::path& out, Stage s) { return out / path::stamps / (std::string(stage_name(s)) + ".json"); }

// Files under `rel` (a file or a directory), relative to `out`, sorted.
std::vector<fs::path> files_under(const fs::path& out, const fs::path& rel) {
  std::vector<fs::path> files;
  const auto full = out / rel;
  if (fs::is_directory(full)) {
    for (const auto& e : fs::recursive_directory_iterator(full))
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), out));
  } else {
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_manifest(const fs::path& out) {
  json stages = json::object();
  for (auto s : kAllStages) {
    const auto p = stamp_path(out, s);
    if (fs::exists(p)) stages[std::string(stage_name(s))] = json::parse(io::read_file(p));
  }
  json m = {{"schema_version", kSchemaVersion}, {"stages", stages}};
  io::write_file(out / path::manifest, m.dump(2) + "\n");
}

void write_stamp(const fs::path& out, Stage s, const RunConfig& cfg, const std::vector<fs::path>& artifacts) {
  json files = json::object();
  for (const auto& a : artifacts)
    for (const auto& f : files_under(out, a)) files[f.generic_string()] = sha256_hex(io::read_file(out / f));
  json stamp = {{"stage", stage_name(s)}, {"config_hash", config_hash(cfg, s)}, {"artifacts", files}};
  io::write_file(stamp_path(out, s), stamp.dump(2) + "\n");
  write_manifest(out);
}

// Checks that `s` ran under a config that agrees with `cfg` on every key
// feeding it, and that its files are unchanged since. `primary` is the
// artifact named when the stage has not run at all.
void require_stage(const fs::path& out, Stage s, const RunConfig& cfg, const fs::path& primary) {
  if (!fs::exists(out / primary))
    throw MissingArtifactError("missing " + (out / primary).string() + " (run the " + std::string(stage_name(s)) +
                               " stage first)");
  const auto sp = stamp_path(out, s);
  if (!fs::exists(sp))
    throw MissingArtifactError("missing " + sp.string() + " (run the " + std::string(stage_name(s)) +
                               " stage first)");
  const auto stamp = json::parse(io::read_file(sp));
  const auto want = config_hash(cfg, s);
  const auto have = stamp.at("config_hash").get<std::string>();
  if (have != want)
    throw ValidationError("artifacts of stage " + std::string(stage_name(s)) + " in " + out.string() +
                          " were produced by config hash " + have.substr(0, 12) + " but the current config gives " +
                          want.substr(0, 12) + "; rerun that stage");
  for (const auto& [file, digest] : stamp.at("artifacts").items()) {
    const auto p = out / file;
    if (!fs::exists(p)) throw MissingArtifactError("missing " + p.string() + " listed in " + sp.string());
    if (sha256_hex(io::read_file(p)) != digest.get<std::string>())
      throw ValidationError(p.string() + " changed after stage " + std::string(stage_name(s)) + " wrote it");
  }
}

graph::SynthSpec synth_spec(const RunConfig& cfg) {
  graph::SynthSpec s;
  s.classes = cfg.synth_classes;
  s.nodes_per_class = static_cast<std::size_t>(cfg.synth_nodes_per_class);
  s.p_in = cfg.synth_p_in;
  s.p_out = cfg.synth_p_out;
  s.vocab.keywords_per_class = static_cast<std::size_t>(cfg.synth_keywords);
  s.vocab.noise_words = static_cast<std::size_t>(cfg.synth_noise_words);
  s.vocab.tokens_per_node = static_cast<std::size_t>(cfg.synth_tokens);
  s.vocab.keyword_fraction = cfg.synth_keyword_fraction;
  return s;
}

fs::path cache_root(const RunConfig& cfg, const fs::path& out) {
  return cfg.cache_dir.empty() ? providers::cache_dir(out / "cache") : fs::path(cfg.cache_dir);
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

providers::EmbedderConfig embedder_config(const RunConfig& cfg, const fs::path& out, const std::string& file) {
  providers::EmbedderConfig e;
  e.backend = cfg.embedder;
  e.dim = cfg.embed_dim;
  e.file = file;
  e.endpoint = cfg.embed_endpoint;
  e.model = cfg.embed_model;
  e.cache_file = cache_root(cfg, out) / "embeddings.jsonl";
  return e;
}

graph::Tag load_run_tag(const fs::path& out) {
  return graph::load_tag(out / path::nodes, out / path::edges);
}

graph::EdgeSplit load_split(const fs::path& out) { return graph::parse_edge_split(io::read_file(out / path::edge_split)); }

// The graph selection, annotation and alignment see: the full TAG for node
// tasks, the training edges only for link tasks.
graph::Tag visible_tag(const RunConfig& cfg, const fs::path& out, const graph::Tag& tag) {
  if (!is_link(cfg)) return tag;
  return graph::with_edges(tag, load_split(out).train);
}

std::size_t anno_knn(const RunConfig& cfg, std::size_t records) {
  if (records < 2)
    throw DegenerateInputError("the annotation graph needs at least two annotations, got " + std::to_string(records));
  return std::min(cfg.knn, records - 1);
}

void stage_synth(const RunConfig& cfg, const fs::path& out) {
  graph::Tag tag = cfg.synthetic() ? graph::synth_tag(synth_spec(cfg), cfg.seed)
                                   : graph::load_tag(cfg.nodes_file, cfg.edges_file);
  tag.validate();
  if (!is_link(cfg) && !tag.has_labels()) throw ValidationError("task = node needs labeled nodes");
  graph::save_tag(tag, out / path::nodes, out / path::edges);
  std::vector<fs::path> written = {path::nodes, path::edges};
  if (is_link(cfg)) {
    const double train = 1.0 - cfg.valid_fraction - cfg.test_fraction;
    const auto split =
        graph::make_edge_split(tag, {train, cfg.valid_fraction, cfg.test_fraction}, cfg.negatives, cfg.seed);
    io::write_file(out / path::edge_split, graph::serialize_edge_split(split));
    written.push_back(path::edge_split);
  }
  log::info("synth: " + std::to_string(tag.num_nodes()) + " nodes, " + std::to_string(tag.graph.num_edges()) +
            " edges");
  write_stamp(out, Stage::synth, cfg, written);
}

void stage_select(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::synth, cfg, path::nodes);
  const auto tag = visible_tag(cfg, out, load_run_tag(out));
  auto embedder = providers::make_embedder(embedder_config(cfg, out, cfg.embed_file));
  const auto features = embedder->embed(tag.texts);
  if (features.count() != tag.num_nodes())
    throw ValidationError("embedder returned " + std::to_string(features.count()) + " rows for " +
                          std::to_string(tag.num_nodes()) + " nodes");
  const auto clustering = select::kmeans(features, cfg.clusters, select::kDefaultKmeansIters, cfg.seed);
  select::SelectionResult sel;
  if (is_link(cfg)) {
    const auto scores = select::node_densities(features, clustering);
    const auto budget = cfg.edge_budget ? cfg.edge_budget : select::edge_budget(tag.graph.num_edges());
    sel = select::select_edges(tag, scores, budget);
  } else {
    sel = select::select_nodes(features, clustering, select::node_budget(tag.num_nodes(), cfg.node_fraction));
  }
  graph::save_gemb(features, out / path::features);
  io::write_file(out / path::selection, select::serialize_selection(sel));
  log::info("select: " + std::to_string(sel.size()) + (is_link(cfg) ? " edges" : " nodes"));
  write_stamp(out, Stage::select, cfg, {path::features, path::selection});
}

std::unique_ptr<providers::Annotator> make_annotator(const RunConfig& cfg) {
  if (cfg.annotator == "mock") {
    const auto spec = synth_spec(cfg);
    return std::make_unique<providers::MockAnnotator>(graph::make_lexicon(spec.classes, spec.vocab, cfg.seed),
                                                      cfg.seed);
  }
  return std::make_unique<providers::HttpChatAnnotator>(env_or("GAGA_LLM_ENDPOINT", cfg.llm_endpoint),
                                                        cfg.llm_model, cfg.temperature,
                                                        env_or("GAGA_LLM_API_KEY", ""));
}

void stage_annotate(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::synth, cfg, path::nodes);
  require_stage(out, Stage::select, cfg, path::selection);
  const auto tag = visible_tag(cfg, out, load_run_tag(out));
  const auto sel = select::parse_selection(io::read_file(out / path::selection));
  const auto requests =
      providers::build_requests(tag, sel, providers::builtin_template(cfg.prompt_template), cfg.categories);
  auto annotator = make_annotator(cfg);
  providers::JsonlCache cache(cache_root(cfg, out) / "annotations.jsonl");
  const auto result =
      providers::annotate(requests, *annotator, cache, {cfg.parallelism, cfg.price_prompt, cfg.price_completion});
  io::write_file(out / path::failures, providers::serialize_failures(result.failures));
  if (result.records.empty()) {
    const auto& f = result.failures.front();
    throw ProviderError("every annotation request failed; first error: " + f.error, f.http_status);
  }
  if (!result.failures.empty())
    log::warn(std::to_string(result.failures.size()) + " annotation requests failed; see " +
              (out / path::failures).string());
  const auto& l = result.ledger;
  json cost = {{"remote_calls", l.remote_calls},
               {"cache_hits", l.cache_hits},
               {"prompt_tokens", l.prompt_tokens},
               {"completion_tokens", l.completion_tokens},
               {"cost", l.cost}};
  io::write_file(out / path::cost, cost.dump(2) + "\n");
  io::write_file(out / path::annotations, providers::serialize_records(result.records));
  log::info("annotate: " + std::to_string(result.records.size()) + " records, " + std::to_string(l.remote_calls) +
            " remote calls, " + std::to_string(l.cache_hits) + " cache hits");
  write_stamp(out, Stage::annotate, cfg, {path::annotations, path::failures});
}

std::vector<providers::AnnotationRecord> load_records(const fs::path& out) {
  return providers::parse_records(io::read_file(out / path::annotations));
}

void stage_anno_graph(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::annotate, cfg, path::annotations);
  const auto records = load_records(out);
  const auto k = anno_knn(cfg, records.size());
  std::vector<std::string> texts;
  for (const auto& r : records) texts.push_back(r.annotation_text);
  auto embedder = providers::make_embedder(embedder_config(cfg, out, cfg.anno_embed_file));
  const auto emb = embedder->embed(texts);
  const auto ag = annograph::build_annotation_graph(records, emb, k);
  graph::save_gemb(emb, out / path::anno_features);
  annograph::save_annotation_graph(ag, out / path::anno_graph);
  log::info("build-anno-graph: " + std::to_string(ag.num_nodes()) + " nodes, " +
            std::to_string(ag.tag.graph.num_edges()) + " edges");
  write_stamp(out, Stage::anno_graph, cfg, {path::anno_features, path::anno_graph});
}

align::AlignConfig align_config(const RunConfig& cfg) {
  align::AlignConfig a;
  a.epochs = cfg.align_epochs;
  a.batch_size = cfg.batch;
  a.hops = cfg.hops;
  a.anno_hops = cfg.anno_hops;
  a.node_cap = cfg.node_cap;
  a.kp = cfg.kp;
  a.hidden = cfg.hidden;
  a.layers = cfg.layers;
  a.lr = cfg.lr_align;
  a.alpha = cfg.alpha;
  a.gamma = cfg.gamma;
  a.seed = cfg.seed;
  return a;
}

void stage_align(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::synth, cfg, path::nodes);
  require_stage(out, Stage::select, cfg, path::features);
  require_stage(out, Stage::annotate, cfg, path::annotations);
  require_stage(out, Stage::anno_graph, cfg, path::anno_features);
  const auto ac = align_config(cfg);
  const auto features = graph::load_gemb(out / path::features);
  align::AlignResult result;
  if (cfg.baseline) {
    result.encoder = align::initial_encoder(features.dim(), ac);
    result.codebook = align::random_codebook(cfg.kp, result.encoder.out_dim(), cfg.gamma, cfg.seed);
    log::info("align: baseline, untrained encoder and random codebook");
  } else {
    const auto tag = visible_tag(cfg, out, load_run_tag(out));
    const auto records = load_records(out);
    const auto ag = annograph::load_annotation_graph(out / path::anno_graph, records, anno_knn(cfg, records.size()));
    const auto anno_features = graph::load_gemb(out / path::anno_features);
    result = align::align_train(tag, features, ag, anno_features, ac);
    if (!result.log.empty())
      log::info("align: loss " + std::to_string(result.log.front().loss) + " -> " +
                std::to_string(result.log.back().loss));
  }
  align::save_alignment(out / path::alignment, result, {{"config_hash", config_hash(cfg, Stage::align)}});
  write_stamp(out, Stage::align, cfg, {path::alignment});
}

void stage_finetune(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::synth, cfg, path::nodes);
  require_stage(out, Stage::select, cfg, path::features);
  require_stage(out, Stage::align, cfg, path::alignment / "index.json");
  const auto tag = load_run_tag(out);
  const auto features = graph::load_gemb(out / path::features);
  const auto aligned = align::load_alignment(out / path::alignment);
  downstream::ModelInit init;
  init.residual = cfg.residual;
  init.query_scale = cfg.query_scale;
  const std::size_t outputs = is_link(cfg) ? 1 : static_cast<std::size_t>(tag.num_classes);
  const auto model = downstream::make_model(aligned.encoder, aligned.codebook.z, outputs, init, cfg.seed);
  downstream::FinetuneConfig fc;
  fc.epochs = cfg.finetune_epochs;
  fc.lr = cfg.lr_finetune;
  fc.patience = cfg.patience;
  fc.label_rate = cfg.label_rate;
  fc.residual = cfg.residual;
  fc.seed = cfg.seed;
  const auto result = is_link(cfg) ? downstream::finetune_link(tag, load_split(out), features, model, fc)
                                   : downstream::finetune_node(tag, features, model, fc);
  auto ck = downstream::model_checkpoint(result.model);
  ck.meta["config_hash"] = config_hash(cfg, Stage::finetune);
  tensor::save_checkpoint(out / path::model, ck);
  io::write_file(out / path::history, downstream::history_csv(result.history, is_link(cfg) ? "auc" : "accuracy"));
  auto report = result.report.to_json();
  report["config_hash"] = config_hash(cfg, Stage::finetune);
  io::write_file(out / path::finetune_report, report.dump(2) + "\n");
  const auto& g = result.gauges;
  json runtime = {{"train_seconds", g.train_seconds},
                  {"seconds_per_epoch", g.seconds_per_epoch},
                  {"peak_rss_kb", g.peak_rss_kb},
                  {"epochs_run", result.report.epochs_run}};
  io::write_file(out / path::runtime, runtime.dump(2) + "\n");
  log::info("finetune: best epoch " + std::to_string(result.report.best_epoch) + " of " +
            std::to_string(result.report.epochs_run));
  write_stamp(out, Stage::finetune, cfg, {path::model, path::history, path::finetune_report});
}

void stage_evaluate(const RunConfig& cfg, const fs::path& out) {
  require_stage(out, Stage::synth, cfg, path::nodes);
  require_stage(out, Stage::select, cfg, path::features);
  require_stage(out, Stage::finetune, cfg, path::model / "index.json");
  const auto tag = load_run_tag(out);
  const auto features = graph::load_gemb(out / path::features);
  const auto model = downstream::model_from_checkpoint(tensor::load_checkpoint(out / path::model));
  const auto trained = json::parse(io::read_file(out / path::finetune_report));
  auto report = downstream::EvalReport::from_json(trained);
  const auto splits = is_link(cfg) ? downstream::evaluate_link(tag, load_split(out), features, model)
                                   : downstream::evaluate_node(tag, features, model);
  for (const auto& [split, metrics] : splits)
    for (const auto& [name, value] : metrics) report.splits[split][name] = value;
  auto j = report.to_json();
  j["config_hash"] = config_hash(cfg, Stage::evaluate);
  io::write_file(out / path::eval_report, j.dump(2) + "\n");
  io::write_file(out / path::prototypes, downstream::prototype_distances_csv(visible_tag(cfg, out, tag), features, model));
  std::ostringstream summary;
  for (const auto& [name, value] : report.splits["test"]) summary << " test " << name << "=" << value;
  log::info("evaluate:" + summary.str());
  write_stamp(out, Stage::evaluate, cfg, {path::eval_report, path::prototypes});
}

}  // namespace

void run_stage(Stage stage, const RunConfig& cfg, const fs::path& out) {
  validate(cfg);
  fs::create_directories(out / path::stamps);
  io::write_file(out / "run_config.txt", serialize_config(cfg));
  switch (stage) {
    case Stage::synth: return stage_synth(cfg, out);
    case Stage::select: return stage_select(cfg, out);
    case Stage::annotate: return stage_annotate(cfg, out);
    case Stage::anno_graph: return stage_anno_graph(cfg, out);
    case Stage::align: return stage_align(cfg, out);
    case Stage::finetune: return stage_finetune(cfg, out);
    case Stage::evaluate: return stage_evaluate(cfg, out);
    case Stage::none: break;
  }
  throw ContractError("run_stage called without a stage");
}

void run_pipeline(const RunConfig& cfg, const fs::path& out) {
  for (auto s : kAllStages) run_stage(s, cfg, out);
}

std::pair<std::string, std::vector<std::string>> parse_sweep_spec(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size())
    throw ValidationError("sweep must look like key=v1,v2,... (got '" + std::string(spec) + "')");
  const std::string key(spec.substr(0, eq));
  config_key(key);
  std::vector<std::string> values;
  std::string_view rest = spec.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const auto v = rest.substr(0, comma);
    if (v.empty()) throw ValidationError("empty value in sweep '" + std::string(spec) + "'");
    values.emplace_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return {key, values};
}

json read_eval_report(const fs::path& out) {
  const auto p = out / path::eval_report;
  io::require_file(p);
  return json::parse(io::read_file(p));
}

std::string run_sweep(const RunConfig& cfg, const fs::path& out, Stage last, const std::string& key,
                      const std::vector<std::string>& values) {
  if (last != Stage::finetune && last != Stage::evaluate)
    throw ValidationError("--sweep applies to the finetune, evaluate and pipeline stages");
  if (values.empty()) throw ValidationError("sweep over '" + key + "' has no values");
  const auto metrics = is_link(cfg) ? std::vector<std::string>{"auc", "mrr@10"} : std::vector<std::string>{"accuracy"};
  std::string csv = key;
  for (const auto* split : {"valid", "test"})
    for (const auto& m : metrics) csv += std::string(",") + split + "_" + m;
  csv += ",best_epoch\n";
  for (const auto& value : values) {
    RunConfig run = cfg;
    set_value(run, key, value);
    if (run.cache_dir.empty()) run.cache_dir = cache_root(cfg, out).string();
    const auto dir = out / "sweep" / (key + "=" + value);
    run_pipeline(run, dir);
    const auto report = read_eval_report(dir);
    csv += value;
    for (const auto* split : {"valid", "test"})
      for (const auto& m : metrics) {
        std::ostringstream os;
        os.precision(10);
        os << report.at("splits").at(split).at(m).get<double>();
        csv += "," + os.str();
      }
    csv += "," + std::to_string(report.at("best_epoch").get<std::size_t>()) + "\n";
  }
  io::write_file(out / "sweep.csv", csv);
  return csv;
}

}  // namespace gaga::cli
