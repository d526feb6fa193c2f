// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "iecache/action.hpp"
#include "iecache/cache.hpp"
#include "iecache/datasets.hpp"
#include "iecache/errors.hpp"
#include "iecache/extraction.hpp"
#include "iecache/prompts.hpp"
#include "iecache/trace.hpp"

namespace iecache {

class Gateway;

struct AgentConfig {
  std::size_t max_steps = 8;         // H
  bool update_enabled = true;        // false reproduces the "w/o update" ablation
  std::size_t check_interval = 0;    // K; 0 disables self-check
  std::size_t repair_retries = 2;    // R
  bool monolithic = false;
  std::optional<std::filesystem::path> gold_schema_path;
  bool use_task_gold_schema = false;
  bool allow_focus_slots = false;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  std::size_t max_slots = kDefaultMaxSlots;
  std::size_t chunk_token_budget = 3000;
  std::size_t chunk_overlap_tokens = 200;
  std::size_t max_rows_per_extraction = kDefaultMaxRowsPerExtraction;
  std::size_t extraction_width = 1;

  void validate() const;
  ExtractionOptions extraction_options() const;
  nlohmann::ordered_json to_json() const;
};

inline constexpr std::size_t kDegradedFocusChars = 200;

// Thrown when a gateway error ends a run early; carries the partial trace.
class RunAborted : public Error {
 public:
  RunAborted(RunTrace trace, const std::string& what) : Error(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const { return trace_; }

 private:
  RunTrace trace_;
};

struct RunResult {
  std::string answer;
  RunTrace trace;
  std::optional<RecordSet> initial_records;  // E, for extraction-quality scoring
};

struct ReasonResult {
  std::string reasoning;
  Action action;
  std::string model_output;  // last raw output
  std::size_t model_calls = 0;
  bool degraded = false;     // irreparable output turned into a Seek
  Warnings warnings;
};

std::string_view family_instruction(const PromptSet& prompts, TaskFamily family);

// One reasoning call over the query and the rendered cache, repaired up to
// `repair_retries` times. Output that never parses becomes a Seek whose focus
// is the first 200 characters of the reply.
ReasonResult reason(std::string_view query, std::string_view cache_rendering, TaskFamily family, Gateway& model,
                    const PromptSet& prompts, std::size_t repair_retries);

struct FallbackResult {
  std::string answer;
  std::string model_output;
};

// Direct answer from the query and the cache, used at the step limit.
FallbackResult fallback_answer(std::string_view query, const Cache& cache, TaskFamily family, Gateway& model,
                               const PromptSet& prompts);

// The cache-aware reasoning loop. Gateway errors throw RunAborted; model
// output problems never abort.
RunResult run(const TaskInstance& task, const AgentConfig& config, Gateway& model,
              const PromptSet& prompts = PromptSet::defaults());

}  // namespace iecache
