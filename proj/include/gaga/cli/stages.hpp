#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaga/cli/config.hpp"

namespace gaga::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitMissing = 2;     // a prerequisite artifact is absent
inline constexpr int kExitValidation = 3;  // bad config, input or stale artifact
inline constexpr int kExitProvider = 4;    // annotation or embedding service failed

int exit_code_for(const std::exception& e);

// Exclusive ownership of an output directory for one invocation. A lock left
// by a process that no longer exists is taken over with a warning.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& out_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Runs one stage against `out_dir`, reading the artifacts of earlier stages.
// Each stage writes a stamp (stamps/<stage>.json) holding its config hash and
// the SHA-256 of every file it wrote, then refreshes manifest.json.
void run_stage(Stage stage, const RunConfig& cfg, const std::filesystem::path& out_dir);

// Every stage in order.
void run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Runs the pipeline up to `last` once per value of `key`, each in
// <out_dir>/sweep/<key>=<value>, and writes <out_dir>/sweep.csv with one row
// per value. `last` must be finetune or evaluate; either way each value runs
// through evaluation, since the CSV reports its metrics. Returns the CSV text.
std::string run_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, Stage last, const std::string& key,
                      const std::vector<std::string>& values);

// Parses "key=v1,v2,...".
std::pair<std::string, std::vector<std::string>> parse_sweep_spec(std::string_view spec);

// The evaluation report a finished run left in `out_dir`.
nlohmann::json read_eval_report(const std::filesystem::path& out_dir);

}  // namespace gaga::cli
