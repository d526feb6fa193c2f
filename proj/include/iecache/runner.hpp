// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iecache/agent.hpp"
#include "iecache/baselines.hpp"
#include "iecache/evaluation.hpp"
#include "iecache/gateway.hpp"

namespace iecache {

struct RunConfig {
  std::filesystem::path dataset;
  Method method = Method::iecache;
  ModelProfile profile;
  AgentConfig agent;
  BaselineConfig baseline;
  std::size_t repeats = 1;
  std::size_t parallel_workers = 4;
  std::filesystem::path out_dir = "runs/latest";
  std::optional<std::filesystem::path> record_fixture;
  std::optional<std::filesystem::path> fixture;
  std::optional<std::filesystem::path> prompts_dir;

  void validate() const;
};

// Flat "key = value" document; '#' starts a comment line. Relative paths are
// resolved against `base_dir`. Unknown keys throw ConfigError.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
// Sets one key on an existing config (same keys as the file format).
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value,
                        const std::filesystem::path& base_dir);
// Every effective setting, one "key = value" line each, in a fixed order.
std::string render_config(const RunConfig& config);

// File-name-safe form of a task id.
std::string trace_file_stem(std::string_view task_id);
std::filesystem::path trace_path(const std::filesystem::path& out_dir, std::string_view task_id, std::size_t repeat);

struct ExperimentReport {
  Method method = Method::iecache;
  std::size_t n = 0;
  std::size_t repeats = 1;
  std::vector<MetricReport> per_repeat;
  std::vector<ItemScore> per_item_mean;  // per task, averaged over repeats
  Aggregates aggregates;                  // mean of per-repeat aggregates
};

nlohmann::ordered_json experiment_to_json(const ExperimentReport& report);
std::string experiment_table(const ExperimentReport& report, const std::vector<std::string>& metrics = {});

// Runs the method over every task and repeat, then writes
// traces/<id>.<repeat>.jsonl, report.json, report.txt and config.snapshot
// under config.out_dir. Per-task failures become null metrics; the call
// throws only when every run failed or the backend cannot be created.
ExperimentReport run_experiment(const RunConfig& config);

// Builds the backend for a config: scripted when a fixture is set, HTTP otherwise.
std::shared_ptr<ModelBackend> make_backend(const RunConfig& config);

struct ReplayVerdict {
  RunTrace trace;
  std::vector<std::string> violations;
  std::string summary;
  bool ok() const { return violations.empty(); }
};

ReplayVerdict replay(const std::filesystem::path& trace_file);

struct EvalResult {
  ExperimentReport report;
  bool matches_persisted = false;  // recomputed aggregates equal report.json
};

// Rescores the answers persisted under an output directory against the
// dataset named in its config.snapshot.
EvalResult evaluate_run_dir(const std::filesystem::path& out_dir);

}  // namespace iecache
