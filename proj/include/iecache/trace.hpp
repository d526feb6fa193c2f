// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iecache/action.hpp"
#include "iecache/schema.hpp"

namespace iecache {

enum class Phase { schema, extract, reason, update, check, final, fallback };
enum class Method { iecache, generic, cot, react };
enum class TerminatedBy { final, step_limit };

std::string_view to_string(Phase phase);
std::string_view to_string(Method method);
std::string_view to_string(TerminatedBy by);
Phase phase_from_string(std::string_view s);
Method method_from_string(std::string_view s);
TerminatedBy terminated_by_from_string(std::string_view s);

struct StepRecord {
  std::size_t step = 0;
  Phase phase = Phase::reason;
  std::string model_output;
  std::optional<Action> action;
  std::optional<std::string> cache_digest;     // null before a cache exists
  std::size_t cache_size = 0;
  std::optional<std::string> cache_rendering;  // the text the digest covers
  std::size_t model_calls = 0;
  Warnings warnings;
};

struct RunTrace {
  std::string task_id;
  Method method = Method::iecache;
  std::vector<StepRecord> steps;
  std::string answer;
  std::optional<TerminatedBy> terminated_by;  // null when the run aborted
  std::optional<std::string> error;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  std::size_t count(Phase phase) const;
  std::size_t total_model_calls() const;
};

// JSONL: a run-header object, then one StepRecord per line. Byte-stable.
std::string serialize_trace(const RunTrace& trace);
RunTrace parse_trace(std::string_view jsonl);

void write_trace(const RunTrace& trace, const std::filesystem::path& path);
RunTrace read_trace(const std::filesystem::path& path);

// Every violated invariant (phase grammar, termination, digest consistency,
// step bound, ablation, scratchpad growth); empty when the trace is valid.
std::vector<std::string> trace_violations(const RunTrace& trace);

// Throws ValidationError listing trace_violations() when nonempty.
void validate_trace(const RunTrace& trace);

// Human-readable one-line-per-step summary.
std::string summarize_trace(const RunTrace& trace);

}  // namespace iecache
