// SPDX-License-Identifier: Apache-2.0
#include "iecache/agent.hpp"

#include "iecache/gateway.hpp"
#include "iecache/repair.hpp"
#include "iecache/text.hpp"

namespace iecache {

using ordered_json = nlohmann::ordered_json;

void AgentConfig::validate() const {
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (cache_capacity < 1) throw ConfigError("cache capacity must be positive");
  if (max_slots < 1) throw ConfigError("max_slots must be positive");
  if (chunk_token_budget < 2) throw ConfigError("chunk_token_budget too small");
  if (monolithic && (gold_schema_path || use_task_gold_schema)) {
    throw ConfigError("monolithic extraction cannot be combined with a gold schema");
  }
}

ExtractionOptions AgentConfig::extraction_options() const {
  ExtractionOptions o;
  o.chunk_token_budget = chunk_token_budget;
  o.chunk_overlap_tokens = chunk_overlap_tokens;
  o.max_rows = max_rows_per_extraction;
  o.repair_retries = repair_retries;
  o.parallel_width = extraction_width;
  o.allow_focus_slots = allow_focus_slots;
  o.max_slots = max_slots;
  return o;
}

ordered_json AgentConfig::to_json() const {
  ordered_json j = ordered_json::object();
  j["max_steps"] = max_steps;
  j["update_enabled"] = update_enabled;
  j["check_interval"] = check_interval;
  j["repair_retries"] = repair_retries;
  j["monolithic"] = monolithic;
  j["gold_schema"] = gold_schema_path ? ordered_json(gold_schema_path->generic_string())
                                      : (use_task_gold_schema ? ordered_json("task") : ordered_json(nullptr));
  j["allow_focus_slots"] = allow_focus_slots;
  j["cache_capacity"] = cache_capacity;
  j["max_slots"] = max_slots;
  j["chunk_token_budget"] = chunk_token_budget;
  j["chunk_overlap_tokens"] = chunk_overlap_tokens;
  j["max_rows_per_extraction"] = max_rows_per_extraction;
  return j;
}

std::string_view family_instruction(const PromptSet& prompts, TaskFamily family) {
  switch (family) {
    case TaskFamily::qa:
      return prompts.family_qa;
    case TaskFamily::planning:
      return prompts.family_planning;
    case TaskFamily::summarization:
      return prompts.family_summarization;
  }
  return prompts.family_qa;
}

ReasonResult reason(std::string_view query, std::string_view cache_rendering, TaskFamily family, Gateway& model,
                    const PromptSet& prompts, std::size_t repair_retries) {
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.reason, {{"query", std::string(query)},
                                                    {"family_instruction", std::string(family_instruction(prompts, family))},
                                                    {"cache", std::string(cache_rendering)}})}};
  auto outcome = call_with_repair<ParsedAction>(
      model, std::move(messages), [](const std::string& out) { return parse_action(out); }, repair_retries, prompts,
      "end with exactly one of <final>answer</final> or <seek>missing information</seek>");

  ReasonResult r;
  r.model_output = outcome.last_output;
  r.model_calls = outcome.model_calls;
  r.warnings = std::move(outcome.warnings);
  if (outcome.value) {
    r.reasoning = std::move(outcome.value->reasoning);
    r.action = std::move(outcome.value->action);
    return r;
  }
  r.degraded = true;
  r.reasoning = std::string(text::trim(outcome.last_output));
  std::string focus = text::utf8_prefix(r.reasoning, kDegradedFocusChars);
  if (text::trim(focus).empty()) focus = text::utf8_prefix(query, kDegradedFocusChars);
  r.action = SeekAction{std::move(focus)};
  r.warnings.push_back("reason: no valid directive after " + std::to_string(r.model_calls) +
                       " calls, continuing as seek");
  return r;
}

FallbackResult fallback_answer(std::string_view query, const Cache& cache, TaskFamily family, Gateway& model,
                               const PromptSet& prompts) {
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.fallback, {{"query", std::string(query)},
                                                      {"family_instruction", std::string(family_instruction(prompts, family))},
                                                      {"cache", render_cache(cache)}})}};
  ChatResponse reply = model.complete(std::move(messages));
  return FallbackResult{strip_final_tags(reply.content), std::move(reply.content)};
}

namespace {

ExtractionSchema default_schema() {
  ExtractionSchema s;
  s.slots.push_back(SchemaSlot{"fact", "a statement from the document relevant to the question", ValueKind::text});
  return s;
}

class TraceBuilder {
 public:
  explicit TraceBuilder(RunTrace& trace) : trace_(trace) {}

  void add(std::size_t step, Phase phase, std::string output, std::optional<Action> action, const Cache* cache,
           std::size_t calls, Warnings warnings) {
    StepRecord s;
    s.step = step;
    s.phase = phase;
    s.model_output = std::move(output);
    s.action = std::move(action);
    if (cache) {
      s.cache_digest = cache->digest();
      s.cache_size = cache->size();
      s.cache_rendering = render_cache(*cache);
    }
    s.model_calls = calls;
    s.warnings = std::move(warnings);
    trace_.steps.push_back(std::move(s));
  }

 private:
  RunTrace& trace_;
};

}  // namespace

RunResult run(const TaskInstance& task, const AgentConfig& config, Gateway& model, const PromptSet& prompts) {
  config.validate();
  if (text::trim(task.query).empty() || text::trim(task.text).empty()) {
    throw Error("task " + task.id + " needs a nonempty query and text");
  }

  RunResult result;
  RunTrace& trace = result.trace;
  trace.task_id = task.id;
  trace.method = Method::iecache;
  trace.config = config.to_json();
  TraceBuilder record(trace);
  const ExtractionOptions xopts = config.extraction_options();

  // Gold schemas are user input; load them before any model call.
  std::optional<ExtractionSchema> gold;
  if (config.gold_schema_path) {
    gold = load_gold_schema(*config.gold_schema_path, config.max_slots);
  } else if (config.use_task_gold_schema) {
    if (!task.gold_schema) throw ConfigError("task " + task.id + " has no gold_schema");
    gold = task.gold_schema;
  }

  try {
    // Schema and initial extraction.
    ExtractionSchema schema;
    std::optional<RecordSet> initial;
    if (config.monolithic) {
      try {
        auto mono = extract_monolithic(task.query, task.text, model, prompts, xopts);
        schema = mono.records.schema;
        record.add(0, Phase::schema, mono.model_output, std::nullopt, nullptr, mono.model_calls, mono.warnings);
        initial = std::move(mono.records);
      } catch (const SchemaParseError& e) {
        schema = default_schema();
        record.add(0, Phase::schema, "", std::nullopt, nullptr, 0,
                   {std::string("schema: monolithic output unusable, using default schema: ") + e.what()});
        initial = RecordSet{schema, {}, std::nullopt};
      }
    } else if (gold) {
      schema = *gold;
      record.add(0, Phase::schema, render_schema(schema), std::nullopt, nullptr, 0, {"schema: gold schema supplied"});
    } else {
      try {
        auto induced = induce_schema(task.query, model, prompts, config.repair_retries, config.max_slots);
        schema = std::move(induced.schema);
        record.add(0, Phase::schema, std::move(induced.model_output), std::nullopt, nullptr, induced.model_calls,
                   std::move(induced.warnings));
      } catch (const SchemaParseError& e) {
        schema = default_schema();
        record.add(0, Phase::schema, "", std::nullopt, nullptr, config.repair_retries + 1,
                   {std::string("schema: induction failed, using default schema: ") + e.what()});
      }
    }

    Warnings init_warnings;
    std::string extract_output;
    std::size_t extract_calls = 0;
    if (!initial) {
      auto ex = extract(task.query, schema, task.text, std::nullopt, model, prompts, xopts);
      extract_output = std::move(ex.model_output);
      extract_calls = ex.model_calls;
      init_warnings = std::move(ex.warnings);
      initial = std::move(ex.records);
    } else {
      init_warnings.push_back("extract: rows came from the monolithic call");
    }
    Cache cache = init_cache(task.query, *initial, config.cache_capacity, &init_warnings);
    schema = cache.schema();
    record.add(0, Phase::extract, std::move(extract_output), std::nullopt, &cache, extract_calls,
               std::move(init_warnings));
    result.initial_records = *initial;

    // Reason-act loop; loop steps are numbered 1..H.
    for (std::size_t step = 1; step <= config.max_steps; ++step) {
      auto r = reason(task.query, render_cache(cache), task.family, model, prompts, config.repair_retries);
      record.add(step, Phase::reason, r.model_output, r.action, &cache, r.model_calls, r.warnings);

      if (auto* fin = std::get_if<FinalAction>(&r.action)) {
        result.answer = fin->answer;
        record.add(step, Phase::final, fin->answer, std::nullopt, &cache, 0, {});
        trace.answer = result.answer;
        trace.terminated_by = TerminatedBy::final;
        return result;
      }

      const std::string focus = std::get<SeekAction>(r.action).focus;
      auto fresh = extract(task.query, schema, task.text, focus, model, prompts, xopts);
      record.add(step, Phase::extract, fresh.model_output, std::nullopt, &cache, fresh.model_calls, fresh.warnings);

      if (!config.update_enabled) {
        record.add(step, Phase::update, "", std::nullopt, &cache, 0, {"update: disabled, cache left unchanged"});
        continue;
      }
      auto updated = update_cache(task.query, fresh.records.schema, cache, fresh.records, step, model, prompts,
                                  config.repair_retries);
      cache = std::move(updated.cache);
      schema = cache.schema();
      record.add(step, Phase::update, std::move(updated.model_output), std::nullopt, &cache, updated.model_calls,
                 std::move(updated.warnings));

      if (config.check_interval > 0 && step % config.check_interval == 0) {
        auto checked = self_check(task.query, schema, cache, r.reasoning, step, model, prompts);
        cache = std::move(checked.cache);
        schema = cache.schema();
        record.add(step, Phase::check, std::move(checked.model_output), std::nullopt, &cache, checked.model_calls,
                   std::move(checked.warnings));
      }
    }

    auto fb = fallback_answer(task.query, cache, task.family, model, prompts);
    result.answer = fb.answer;
    Warnings fb_warnings;
    if (fb.answer.empty()) fb_warnings.push_back("fallback: empty answer");
    record.add(config.max_steps + 1, Phase::fallback, std::move(fb.model_output), std::nullopt, &cache, 1,
               std::move(fb_warnings));
    trace.answer = result.answer;
    trace.terminated_by = TerminatedBy::step_limit;
    return result;
  } catch (const GatewayError& e) {
    trace.error = e.what();
    throw RunAborted(std::move(trace), std::string("run ") + task.id + " aborted: " + e.what());
  }
}

}  // namespace iecache
