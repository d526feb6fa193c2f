// SPDX-License-Identifier: Apache-2.0
#include "iecache/baselines.hpp"

#include "iecache/chunking.hpp"
#include "iecache/gateway.hpp"
#include "iecache/hashing.hpp"
#include "iecache/repair.hpp"
#include "iecache/text.hpp"

namespace iecache {

using ordered_json = nlohmann::ordered_json;

void BaselineConfig::validate() const {
  if (method == Method::iecache) throw ConfigError("iecache is not a baseline method");
  if (method == Method::react) {
    if (react_max_steps < 1) throw ConfigError("react_max_steps must be positive");
    if (react_window_tokens < 2) throw ConfigError("react_window_tokens too small");
  }
}

ordered_json BaselineConfig::to_json() const {
  ordered_json j = ordered_json::object();
  if (method == Method::react) {
    j["max_steps"] = react_max_steps;
    j["react_window_tokens"] = react_window_tokens;
    j["repair_retries"] = repair_retries;
  }
  return j;
}

namespace {

void check_task(const TaskInstance& task) {
  if (text::trim(task.query).empty() || text::trim(task.text).empty()) {
    throw Error("task " + task.id + " needs a nonempty query and text");
  }
}

RunResult single_call(const TaskInstance& task, Method method, const std::string& prompt_template, Gateway& model,
                      const PromptSet& prompts) {
  check_task(task);
  RunResult result;
  result.trace.task_id = task.id;
  result.trace.method = method;
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompt_template, {{"query", task.query},
                                                     {"text", task.text},
                                                     {"family_instruction", std::string(family_instruction(prompts, task.family))}})}};
  ChatResponse reply;
  try {
    reply = model.complete(std::move(messages));
  } catch (const GatewayError& e) {
    result.trace.error = e.what();
    throw RunAborted(std::move(result.trace), std::string("run ") + task.id + " aborted: " + e.what());
  }
  result.answer = method == Method::cot ? extract_cot_answer(reply.content) : reply.content;
  StepRecord s;
  s.step = 1;
  s.phase = Phase::final;
  s.model_output = std::move(reply.content);
  s.model_calls = 1;
  if (result.answer.empty()) s.warnings.push_back("final: empty answer");
  result.trace.steps.push_back(std::move(s));
  result.trace.answer = result.answer;
  result.trace.terminated_by = TerminatedBy::final;
  return result;
}

}  // namespace

std::string extract_cot_answer(std::string_view output) {
  std::optional<std::string> answer;
  std::size_t pos = 0;
  while (pos <= output.size()) {
    auto nl = output.find('\n', pos);
    std::string_view line = output.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    line = text::trim(line);
    if (line.substr(0, 7) == "Answer:") answer = std::string(text::trim(line.substr(7)));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return answer ? *answer : std::string(output);
}

RunResult run_generic(const TaskInstance& task, Gateway& model, const PromptSet& prompts) {
  return single_call(task, Method::generic, prompts.generic, model, prompts);
}

RunResult run_cot(const TaskInstance& task, Gateway& model, const PromptSet& prompts) {
  return single_call(task, Method::cot, prompts.cot, model, prompts);
}

RunResult run_react(const TaskInstance& task, const BaselineConfig& config, Gateway& model, const PromptSet& prompts) {
  check_task(task);
  BaselineConfig cfg = config;
  cfg.method = Method::react;
  cfg.validate();

  RunResult result;
  RunTrace& trace = result.trace;
  trace.task_id = task.id;
  trace.method = Method::react;
  trace.config = cfg.to_json();

  const auto windows = chunk_text(task.text, cfg.react_window_tokens, 0);
  const std::string last_window = std::to_string(windows.size() - 1);
  std::vector<std::string> scratchpad;  // append-only
  auto pad_text = [&] {
    std::string out;
    for (std::size_t i = 0; i < scratchpad.size(); ++i) {
      if (i) out += "\n\n";
      out += scratchpad[i];
    }
    return out;
  };
  auto add_step = [&](std::size_t step, Phase phase, std::string output, std::optional<Action> action,
                      std::size_t calls, Warnings warnings) {
    StepRecord s;
    s.step = step;
    s.phase = phase;
    s.model_output = std::move(output);
    s.action = std::move(action);
    s.cache_rendering = pad_text();
    s.cache_digest = sha256_hex(*s.cache_rendering);
    s.cache_size = scratchpad.size();
    s.model_calls = calls;
    s.warnings = std::move(warnings);
    trace.steps.push_back(std::move(s));
  };

  try {
    for (std::size_t step = 1; step <= cfg.react_max_steps; ++step) {
      std::vector<Message> messages{
          {Role::system, prompts.system},
          {Role::user, render_template(prompts.react, {{"query", task.query},
                                                       {"family_instruction", std::string(family_instruction(prompts, task.family))},
                                                       {"window_count", std::to_string(windows.size())},
                                                       {"last_window", last_window},
                                                       {"scratchpad", pad_text()}})}};
      auto outcome = call_with_repair<ParsedAction>(
          model, std::move(messages),
          [](const std::string& out) { return parse_action(out, ActionGrammar::react); }, cfg.repair_retries,
          prompts, "end with exactly one of <read>window number</read> or <final>answer</final>");

      Warnings warnings = std::move(outcome.warnings);
      scratchpad.push_back("Thought " + std::to_string(step) + ": " + outcome.last_output);
      if (!outcome.value) {
        scratchpad.push_back("Observation " + std::to_string(step) + ": INVALID ACTION");
        warnings.push_back("react: no valid directive, step skipped");
        add_step(step, Phase::reason, std::move(outcome.last_output), std::nullopt, outcome.model_calls,
                 std::move(warnings));
        continue;
      }
      const Action action = outcome.value->action;
      if (auto* fin = std::get_if<FinalAction>(&action)) {
        add_step(step, Phase::reason, std::move(outcome.last_output), action, outcome.model_calls,
                 std::move(warnings));
        result.answer = fin->answer;
        add_step(step, Phase::final, fin->answer, std::nullopt, 0, {});
        trace.answer = result.answer;
        trace.terminated_by = TerminatedBy::final;
        return result;
      }
      const std::size_t index = std::get<ReadAction>(action).index;
      if (index < windows.size()) {
        scratchpad.push_back("Observation " + std::to_string(step) + " (window " + std::to_string(index) +
                             "):\n" + windows[index].text);
      } else {
        scratchpad.push_back("Observation " + std::to_string(step) + ": OUT OF RANGE (max " + last_window + ")");
      }
      add_step(step, Phase::reason, std::move(outcome.last_output), action, outcome.model_calls, std::move(warnings));
    }

    std::vector<Message> messages{
        {Role::system, prompts.system},
        {Role::user, render_template(prompts.react_fallback, {{"query", task.query},
                                                              {"family_instruction", std::string(family_instruction(prompts, task.family))},
                                                              {"scratchpad", pad_text()}})}};
    ChatResponse reply = model.complete(std::move(messages));
    result.answer = strip_final_tags(reply.content);
    add_step(cfg.react_max_steps + 1, Phase::fallback, std::move(reply.content), std::nullopt, 1, {});
    trace.answer = result.answer;
    trace.terminated_by = TerminatedBy::step_limit;
    return result;
  } catch (const GatewayError& e) {
    trace.error = e.what();
    throw RunAborted(std::move(trace), std::string("run ") + task.id + " aborted: " + e.what());
  }
}

RunResult run_baseline(const TaskInstance& task, const BaselineConfig& config, Gateway& model,
                       const PromptSet& prompts) {
  config.validate();
  switch (config.method) {
    case Method::generic:
      return run_generic(task, model, prompts);
    case Method::cot:
      return run_cot(task, model, prompts);
    case Method::react:
      return run_react(task, config, model, prompts);
    case Method::iecache:
      break;
  }
  throw ConfigError("not a baseline method");
}

}  // namespace iecache
