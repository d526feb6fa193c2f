// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "iecache/datasets.hpp"
#include "iecache/errors.hpp"
#include "iecache/runner.hpp"

namespace fs = std::filesystem;
using namespace iecache;

namespace {

struct RunFlags {
  std::string config;
  std::string method;
  std::string dataset;
  std::optional<std::size_t> max_steps;
  bool no_update = false;
  std::string gold_schema;
  bool monolithic = false;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> check_interval;
  std::string fixture;
  std::string record_fixture;
  std::string out;
  std::string prompts_dir;
};

int do_run(const RunFlags& f) {
  const fs::path cwd = fs::current_path();
  RunConfig config = f.config.empty() ? parse_config("", cwd) : load_config(f.config);
  auto set = [&](const char* key, const std::string& value) {
    if (!value.empty()) apply_config_value(config, key, value, cwd);
  };
  set("method", f.method);
  set("dataset", f.dataset);
  if (f.max_steps) {
    set("max_steps", std::to_string(*f.max_steps));
    set("react_max_steps", std::to_string(*f.max_steps));
  }
  if (f.no_update) set("update_enabled", "false");
  set("gold_schema", f.gold_schema);
  if (f.monolithic) set("monolithic", "true");
  if (f.repeats) set("repeats", std::to_string(*f.repeats));
  if (f.workers) set("parallel_workers", std::to_string(*f.workers));
  if (f.check_interval) set("check_interval", std::to_string(*f.check_interval));
  set("fixture", f.fixture);
  set("record_fixture", f.record_fixture);
  set("out", f.out);
  set("prompts_dir", f.prompts_dir);

  ExperimentReport report = run_experiment(config);
  std::cout << experiment_table(report);
  std::cout << "wrote " << config.out_dir.generic_string() << "\n";
  return 0;
}

int do_eval(const std::string& pred, const std::string& metric) {
  EvalResult r = evaluate_run_dir(pred);
  std::vector<std::string> metrics;
  if (!metric.empty()) metrics.push_back(metric);
  std::cout << experiment_table(r.report, metrics);
  std::cout << "recomputed aggregates " << (r.matches_persisted ? "match" : "DIFFER FROM") << " report.json\n";
  return r.matches_persisted ? 0 : 1;
}

int do_replay(const std::string& trace) {
  ReplayVerdict v = replay(trace);
  std::cout << v.summary;
  if (v.ok()) {
    std::cout << "verdict: OK\n";
    return 0;
  }
  std::cout << "verdict: INVALID\n";
  for (const auto& msg : v.violations) std::cout << "  - " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IE-as-Cache experiment runner"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "run a method over a dataset");
  run_cmd->add_option("--config", rf.config, "flat key = value config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--method", rf.method, "iecache | generic | cot | react");
  run_cmd->add_option("--dataset", rf.dataset, "canonical JSONL dataset");
  run_cmd->add_option("--max-steps", rf.max_steps, "step limit H (also the react step limit)");
  run_cmd->add_flag("--no-update", rf.no_update, "disable cache updates");
  run_cmd->add_option("--gold-schema", rf.gold_schema, "schema JSON file, or \"task\" for per-task gold schemas");
  run_cmd->add_flag("--monolithic", rf.monolithic, "single-call schema and extraction");
  run_cmd->add_option("--repeats", rf.repeats, "runs per task");
  run_cmd->add_option("--workers", rf.workers, "parallel workers");
  run_cmd->add_option("--check-interval", rf.check_interval, "self-check every K steps (0 = off)");
  run_cmd->add_option("--fixture", rf.fixture, "scripted model fixture (JSONL)");
  run_cmd->add_option("--record-fixture", rf.record_fixture, "write every model call to this fixture");
  run_cmd->add_option("--out", rf.out, "output directory");
  run_cmd->add_option("--prompts-dir", rf.prompts_dir, "directory of <name>.txt prompt overrides");

  std::string pred, metric;
  auto* eval_cmd = app.add_subcommand("eval", "rescore a finished run directory");
  eval_cmd->add_option("--pred", pred, "run output directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--metric", metric, "em | rouge1 | rougeL")
      ->check(CLI::IsMember({"em", "rouge1", "rougeL", "x_rouge1", "x_rougeL"}));

  std::string trace;
  auto* replay_cmd = app.add_subcommand("replay", "validate a persisted trace");
  replay_cmd->add_option("--trace", trace, "trace JSONL")->required()->check(CLI::ExistingFile);

  std::string from, in, out;
  auto* adapt_cmd = app.add_subcommand("adapt", "convert a public release to canonical JSONL");
  adapt_cmd->add_option("--from", from, "source format")->required()->check(CLI::IsMember({"tact", "calendar", "qmsum"}));
  adapt_cmd->add_option("--in", in, "release file")->required();
  adapt_cmd->add_option("--out", out, "canonical JSONL output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(rf);
    if (*eval_cmd) return do_eval(pred, metric);
    if (*replay_cmd) return do_replay(trace);
    if (*adapt_cmd) {
      const std::size_t n = adapt(source_format_from_string(from), in, out);
      std::cout << "adapted " << n << " records into " << out << "\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
