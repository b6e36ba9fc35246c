#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "gaga/cli/app.hpp"
#include "gaga/cli/config.hpp"
#include "gaga/cli/stages.hpp"
#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"

using namespace gaga;
using namespace gaga::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gaga_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A run small enough to finish in well under a second.
const char* kTinyConfig = R"(schema_version = 1
synth_classes = 4
synth_nodes_per_class = 25
synth_p_in = 0.2
synth_p_out = 0.01
node_fraction = 0.1
clusters = 5
hidden = 16
layers = 2
kp = 4
align_epochs = 3
finetune_epochs = 5
anno_hops = 0
seed = 3
)";

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tiny_config(const fs::path& dir) {
  const auto p = dir / "tiny.conf";
  io::write_file(p, kTinyConfig);
  return p;
}

}  // namespace

TEST_CASE("config defaults follow the documented experimental setup") {
  const RunConfig c;
  CHECK(c.node_fraction == 0.01);
  CHECK(c.edge_budget == 0);
  CHECK(c.clusters == 40);
  CHECK(c.knn == 5);
  CHECK(c.hops == 2);
  CHECK(c.alpha == 0.6);
  CHECK(c.kp == 40);
  CHECK(c.lr_align == 5e-5);
  CHECK(c.lr_finetune == 1e-3);
}

TEST_CASE("config round trip: parse, serialize, parse is the identity") {
  const auto first = parse_config(kTinyConfig);
  const auto text = serialize_config(first);
  const auto second = parse_config(text);
  CHECK(serialize_config(second) == text);
  CHECK(second.kp == 4);
  CHECK(second.anno_hops == 0);

  RunConfig odd;
  odd.alpha = 0.1 + 0.2;
  odd.lr_align = 3.3e-7;
  odd.categories = "a, b = c";
  const auto back = parse_config(serialize_config(odd));
  CHECK(back.alpha == odd.alpha);
  CHECK(back.lr_align == odd.lr_align);
  CHECK(back.categories == odd.categories);
}

TEST_CASE("config rejects unknown keys, bad ranges and a missing schema version") {
  CHECK_THROWS_AS(parse_config("schema_version = 1\nlearning_rate = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nalpha = 1.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nkp = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nkp = 4.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nlr_align = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nresidual = maybe\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\ntask = graph\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("alpha = 0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 2\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nalpha 0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nalpha = 0.5\nalpha = 0.4\n"), ParseError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\nnodes_file = a.jsonl\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\ntask = link\n"), ValidationError);
  CHECK_NOTHROW(parse_config("# comment\n\nschema_version = 1\n  alpha =   0.25  \n"));
}

TEST_CASE("every key names its provenance and an owning stage where it shapes output") {
  for (const auto& k : config_keys()) {
    CHECK_MESSAGE(!k.provenance.empty(), k.name);
    CHECK_MESSAGE(!k.help.empty(), k.name);
  }
  CHECK(config_key("alpha").stage == Stage::align);
  CHECK(config_key("knn").stage == Stage::anno_graph);
  CHECK(config_key("parallelism").stage == Stage::none);
  CHECK_THROWS_AS(config_key("nope"), ValidationError);
}

TEST_CASE("a stage's config hash moves only with keys feeding it") {
  RunConfig a, b;
  b.alpha = 0.3;
  CHECK(config_hash(a, Stage::annotate) == config_hash(b, Stage::annotate));
  CHECK(config_hash(a, Stage::align) != config_hash(b, Stage::align));
  CHECK(config_hash(a, Stage::evaluate) != config_hash(b, Stage::evaluate));
  RunConfig c;
  c.parallelism = 16;
  CHECK(config_hash(a, Stage::evaluate) == config_hash(c, Stage::evaluate));
  RunConfig d;
  d.seed = 1;
  CHECK(config_hash(a, Stage::synth) != config_hash(d, Stage::synth));
}

TEST_CASE("sweep specs split into a key and its values") {
  const auto [key, values] = parse_sweep_spec("alpha=0,0.2,0.4,0.6,0.8,1.0");
  CHECK(key == "alpha");
  CHECK(values == std::vector<std::string>{"0", "0.2", "0.4", "0.6", "0.8", "1.0"});
  CHECK_THROWS_AS(parse_sweep_spec("alpha"), ValidationError);
  CHECK_THROWS_AS(parse_sweep_spec("alpha="), ValidationError);
  CHECK_THROWS_AS(parse_sweep_spec("alpha=1,,2"), ValidationError);
  CHECK_THROWS_AS(parse_sweep_spec("beta=1"), ValidationError);
}

TEST_CASE("exit codes map error kinds") {
  CHECK(exit_code_for(MissingArtifactError("x")) == 2);
  CHECK(exit_code_for(ValidationError("x")) == 3);
  CHECK(exit_code_for(ParseError("x", 1)) == 3);
  CHECK(exit_code_for(ProviderError("x", 500)) == 4);
  CHECK(exit_code_for(ContractError("x")) == 1);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("help lists every key with its provenance") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  for (const auto& k : config_keys()) {
    CHECK_MESSAGE(r.out.find("--" + k.name) != std::string::npos, k.name);
  }
  CHECK(r.out.find("--budget") != std::string::npos);
  CHECK(r.out.find("alpha = 0.6") != std::string::npos);
  CHECK(r.out.find("artifact default") != std::string::npos);
}

TEST_CASE("bad flags and values exit with the validation code") {
  const auto dir = scratch("flags");
  CHECK(run({"pipeline", "--out", dir.string(), "--alpha", "7"}).code == 3);
  CHECK(run({"pipeline", "--out", dir.string(), "--no-such-flag", "1"}).code == 3);
  CHECK(run({"teleport", "--out", dir.string()}).code == 3);
}

TEST_CASE("finetune without alignment artifacts exits 2 naming the missing file") {
  const auto dir = scratch("missing");
  const auto conf = tiny_config(dir);
  const auto out = dir / "run";
  for (const char* stage : {"synth", "select"}) REQUIRE(run({stage, "--config", conf.string(), "--out", out.string()}).code == 0);
  const auto r = run({"finetune", "--config", conf.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find((out / "alignment" / "index.json").string()) != std::string::npos);
}

TEST_CASE("stage artifacts from a different config abort with exit 3") {
  const auto dir = scratch("stale");
  const auto conf = tiny_config(dir);
  const auto out = (dir / "run").string();
  REQUIRE(run({"synth", "--config", conf.string(), "--out", out}).code == 0);
  const auto r = run({"select", "--config", conf.string(), "--out", out, "--seed", "4"});
  CHECK(r.code == 3);
  CHECK(r.err.find("config hash") != std::string::npos);
  // Keys owned by later stages leave the synth stamp valid.
  CHECK(run({"select", "--config", conf.string(), "--out", out, "--alpha", "0.2"}).code == 0);
}

TEST_CASE("edited artifacts are detected") {
  const auto dir = scratch("tamper");
  const auto conf = tiny_config(dir);
  const auto out = dir / "run";
  REQUIRE(run({"synth", "--config", conf.string(), "--out", out.string()}).code == 0);
  io::write_file(out / "tag" / "edges.txt", "0 1\n");
  const auto r = run({"select", "--config", conf.string(), "--out", out.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("edges.txt") != std::string::npos);
}

TEST_CASE("a live lock keeps a second run out; a stale one is taken over") {
  const auto dir = scratch("lock");
  {
    RunLock held(dir);
    CHECK_THROWS_AS(RunLock{dir}, ValidationError);
  }
  CHECK(!fs::exists(dir / ".gaga.lock"));
  io::write_file(dir / ".gaga.lock", "999999999\n");
  CHECK_NOTHROW(RunLock{dir});
}

TEST_CASE("the pipeline is deterministic and its manifest covers every stage") {
  const auto dir = scratch("determinism");
  const auto conf = tiny_config(dir);
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run({"pipeline", "--config", conf.string(), "--out", a.string()}).code == 0);
  REQUIRE(run({"pipeline", "--config", conf.string(), "--out", b.string()}).code == 0);
  CHECK(io::read_file(a / "eval_report.json") == io::read_file(b / "eval_report.json"));
  for (const char* f : {"model/tensors.bin", "model/index.json", "alignment/tensors.bin", "alignment/index.json"})
    CHECK_MESSAGE(io::read_file(a / f) == io::read_file(b / f), f);

  const auto manifest = nlohmann::json::parse(io::read_file(a / "manifest.json"));
  const auto cfg = parse_config(kTinyConfig);
  for (auto s : kAllStages) {
    const auto name = std::string(stage_name(s));
    REQUIRE_MESSAGE(manifest["stages"].contains(name), name);
    CHECK(manifest["stages"][name]["config_hash"] == config_hash(cfg, s));
    CHECK(!manifest["stages"][name]["artifacts"].empty());
  }
  const auto report = read_eval_report(a);
  CHECK(report["config_hash"] == config_hash(cfg, Stage::evaluate));
  CHECK(fs::exists(a / "history.csv"));
  CHECK(fs::exists(a / "prototype_distances.csv"));
  CHECK(fs::exists(a / "runtime.json"));
}

TEST_CASE("evaluate with an alpha sweep writes one CSV row per value") {
  const auto dir = scratch("sweep");
  const auto conf = tiny_config(dir);
  const auto out = dir / "run";
  const auto r = run({"evaluate", "--config", conf.string(), "--out", out.string(), "--sweep",
                      "alpha=0,0.2,0.4,0.6,0.8,1.0"});
  REQUIRE(r.code == 0);
  const auto csv = io::read_file(out / "sweep.csv");
  CHECK(csv == r.out);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "alpha,valid_accuracy,test_accuracy,best_epoch");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("the link task runs end to end") {
  const auto dir = scratch("link");
  const auto conf = dir / "link.conf";
  io::write_file(conf, std::string(kTinyConfig) + "task = link\nprompt_template = link\nnegatives = 5\n");
  const auto out = dir / "run";
  REQUIRE(run({"pipeline", "--config", conf.string(), "--out", out.string()}).code == 0);
  const auto report = read_eval_report(out);
  CHECK(report["task"] == "link");
  const double auc = report["splits"]["test"]["auc"];
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);
  CHECK(report["splits"]["valid"].contains("mrr@10"));
}

TEST_CASE("the baseline skips alignment but keeps the architecture") {
  const auto dir = scratch("baseline");
  const auto conf = tiny_config(dir);
  const auto out = dir / "run";
  REQUIRE(run({"pipeline", "--config", conf.string(), "--out", out.string(), "--baseline", "true"}).code == 0);
  const auto index = nlohmann::json::parse(io::read_file(out / "alignment" / "index.json"));
  CHECK(index.dump().find("codebook") != std::string::npos);
}
