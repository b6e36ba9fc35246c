#include "gaga/cli/app.hpp"

#include <CLI11.hpp>

#include <map>
#include <optional>

#include "gaga/cli/config.hpp"
#include "gaga/cli/stages.hpp"
#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"
#include "gaga/common/log.hpp"

namespace gaga::cli {

namespace {

// Short spellings of the most swept keys.
const std::map<std::string, std::string> kAliases = {{"budget", "node_fraction"}};

std::vector<std::string> stage_names() {
  std::vector<std::string> names;
  for (auto s : kAllStages) names.emplace_back(stage_name(s));
  names.emplace_back("pipeline");
  return names;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Annotation-guided graph alignment: select, annotate, align, fine-tune, evaluate.", "gaga");
  app.get_formatter()->column_width(34);

  std::string stage_arg, config_file, out_dir = "gaga_out", sweep, log_level;
  app.add_option("stage", stage_arg, "stage to run")->required()->check(CLI::IsMember(stage_names()));
  app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--sweep", sweep, "KEY=V1,V2,...: one run per value, summary in sweep.csv");
  app.add_option("--log-level", log_level, "debug | info | warn | error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  // One flag per config key, applied over the file in registry order.
  const RunConfig defaults;
  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& k : config_keys()) {
    auto& slot = overrides[k.name];
    std::string help = k.help + " [" + k.provenance + "; default " + k.get(defaults) + "]";
    std::string flags = "--" + k.name;
    for (const auto& [alias, target] : kAliases)
      if (target == k.name) flags += ",--" + alias;
    app.add_option_function<std::string>(flags, [&slot](const std::string& v) { slot = v; }, help)
        ->type_name("VALUE");
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gaga: " << e.what() << "\n" << "run 'gaga --help' for usage\n";
    return kExitValidation;
  }

  try {
    if (!log_level.empty()) {
      const std::map<std::string, log::Level> levels = {
          {"debug", log::Level::debug}, {"info", log::Level::info}, {"warn", log::Level::warn},
          {"error", log::Level::error}};
      log::set_level(levels.at(log_level));
    }
    RunConfig cfg = config_file.empty() ? RunConfig{} : parse_config(io::read_file(config_file));
    for (const auto& k : config_keys())
      if (const auto& v = overrides[k.name]) k.set(cfg, *v);
    validate(cfg);

    RunLock lock(out_dir);
    if (!sweep.empty()) {
      const auto [key, values] = parse_sweep_spec(sweep);
      const auto last = stage_arg == "pipeline" ? Stage::evaluate : parse_stage(stage_arg);
      out << run_sweep(cfg, out_dir, last, key, values);
    } else if (stage_arg == "pipeline") {
      run_pipeline(cfg, out_dir);
    } else {
      run_stage(parse_stage(stage_arg), cfg, out_dir);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "gaga: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace gaga::cli
