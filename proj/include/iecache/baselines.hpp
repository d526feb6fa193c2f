// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "iecache/agent.hpp"
#include "iecache/datasets.hpp"
#include "iecache/prompts.hpp"

namespace iecache {

class Gateway;

struct BaselineConfig {
  Method method = Method::generic;
  std::size_t react_max_steps = 8;
  std::size_t react_window_tokens = 3000;
  std::size_t repair_retries = 2;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Single call over instruction, query and full raw text.
RunResult run_generic(const TaskInstance& task, Gateway& model, const PromptSet& prompts = PromptSet::defaults());

// Single call with a step-by-step instruction; the answer is the text after
// the last line starting with "Answer:", or the whole output without one.
RunResult run_cot(const TaskInstance& task, Gateway& model, const PromptSet& prompts = PromptSet::defaults());
std::string extract_cot_answer(std::string_view output);

// Reason/read loop over an append-only scratchpad. <read>i</read> appends
// raw-text window i; out-of-range reads append a sentinel observation.
RunResult run_react(const TaskInstance& task, const BaselineConfig& config, Gateway& model,
                    const PromptSet& prompts = PromptSet::defaults());

RunResult run_baseline(const TaskInstance& task, const BaselineConfig& config, Gateway& model,
                       const PromptSet& prompts = PromptSet::defaults());

}  // namespace iecache
