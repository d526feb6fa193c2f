// SPDX-License-Identifier: Apache-2.0
#include "iecache/trace.hpp"

#include <fstream>
#include <sstream>

#include "iecache/errors.hpp"
#include "iecache/hashing.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::schema:
      return "schema";
    case Phase::extract:
      return "extract";
    case Phase::reason:
      return "reason";
    case Phase::update:
      return "update";
    case Phase::check:
      return "check";
    case Phase::final:
      return "final";
    case Phase::fallback:
      return "fallback";
  }
  return "reason";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::iecache:
      return "iecache";
    case Method::generic:
      return "generic";
    case Method::cot:
      return "cot";
    case Method::react:
      return "react";
  }
  return "iecache";
}

std::string_view to_string(TerminatedBy by) { return by == TerminatedBy::final ? "final" : "step_limit"; }

Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::schema, Phase::extract, Phase::reason, Phase::update, Phase::check, Phase::final,
                  Phase::fallback}) {
    if (to_string(p) == s) return p;
  }
  throw Error("unknown phase: " + std::string(s));
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::iecache, Method::generic, Method::cot, Method::react}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method: " + std::string(s));
}

TerminatedBy terminated_by_from_string(std::string_view s) {
  if (s == "final") return TerminatedBy::final;
  if (s == "step_limit") return TerminatedBy::step_limit;
  throw Error("unknown terminated_by: " + std::string(s));
}

std::size_t RunTrace::count(Phase phase) const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.phase == phase;
  return n;
}

std::size_t RunTrace::total_model_calls() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.model_calls;
  return n;
}

std::string serialize_trace(const RunTrace& trace) {
  std::string out;
  ordered_json header = ordered_json::object();
  header["type"] = "run";
  header["task_id"] = trace.task_id;
  header["method"] = std::string(to_string(trace.method));
  header["answer"] = trace.answer;
  header["terminated_by"] =
      trace.terminated_by ? ordered_json(std::string(to_string(*trace.terminated_by))) : ordered_json(nullptr);
  header["error"] = trace.error ? ordered_json(*trace.error) : ordered_json(nullptr);
  header["config"] = trace.config;
  out += header.dump() + "\n";

  for (const auto& s : trace.steps) {
    ordered_json j = ordered_json::object();
    j["step"] = s.step;
    j["phase"] = std::string(to_string(s.phase));
    j["model_output"] = s.model_output;
    j["action"] = s.action ? action_to_json(*s.action) : ordered_json(nullptr);
    j["cache_digest"] = s.cache_digest ? ordered_json(*s.cache_digest) : ordered_json(nullptr);
    j["cache_size"] = s.cache_size;
    j["cache_rendering"] = s.cache_rendering ? ordered_json(*s.cache_rendering) : ordered_json(nullptr);
    j["model_calls"] = s.model_calls;
    j["warnings"] = s.warnings;
    out += j.dump() + "\n";
  }
  return out;
}

RunTrace parse_trace(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  RunTrace trace;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      ordered_json j = ordered_json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "run") throw Error("first line must be the run header");
        trace.task_id = j.at("task_id").get<std::string>();
        trace.method = method_from_string(j.at("method").get<std::string>());
        trace.answer = j.at("answer").get<std::string>();
        if (!j.at("terminated_by").is_null()) {
          trace.terminated_by = terminated_by_from_string(j["terminated_by"].get<std::string>());
        }
        if (j.contains("error") && !j["error"].is_null()) trace.error = j["error"].get<std::string>();
        if (j.contains("config")) trace.config = j["config"];
        have_header = true;
        continue;
      }
      StepRecord s;
      s.step = j.at("step").get<std::size_t>();
      s.phase = phase_from_string(j.at("phase").get<std::string>());
      s.model_output = j.at("model_output").get<std::string>();
      if (!j.at("action").is_null()) s.action = action_from_json(j["action"]);
      if (!j.at("cache_digest").is_null()) s.cache_digest = j["cache_digest"].get<std::string>();
      s.cache_size = j.at("cache_size").get<std::size_t>();
      if (j.contains("cache_rendering") && !j["cache_rendering"].is_null()) {
        s.cache_rendering = j["cache_rendering"].get<std::string>();
      }
      s.model_calls = j.value("model_calls", std::size_t{0});
      if (j.contains("warnings")) s.warnings = j["warnings"].get<std::vector<std::string>>();
      trace.steps.push_back(std::move(s));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error("trace has no run header");
  return trace;
}

void write_trace(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write trace: " + path.string());
  out << serialize_trace(trace);
}

RunTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("trace not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

namespace {

std::string at_step(std::size_t i, const StepRecord& s) {
  return "record " + std::to_string(i + 1) + " (step " + std::to_string(s.step) + ", " +
         std::string(to_string(s.phase)) + ")";
}

bool is_seek(const StepRecord& s) { return s.action && std::holds_alternative<SeekAction>(*s.action); }
bool is_final(const StepRecord& s) { return s.action && std::holds_alternative<FinalAction>(*s.action); }

// Walks the phase sequence; `complete` is false for aborted runs, which may
// stop anywhere.
void check_grammar(const RunTrace& t, bool complete, std::vector<std::string>& v) {
  const auto& st = t.steps;
  std::size_t i = 0;
  auto expect = [&](Phase p) {
    if (i >= st.size()) {
      if (complete) v.push_back("phase grammar: trace ends where " + std::string(to_string(p)) + " is required");
      return false;
    }
    if (st[i].phase != p) {
      v.push_back("phase grammar: " + at_step(i, st[i]) + " where " + std::string(to_string(p)) + " is required");
      return false;
    }
    ++i;
    return true;
  };

  if (t.method == Method::generic || t.method == Method::cot) {
    if (!expect(Phase::final)) return;
  } else {
    if (t.method == Method::iecache) {
      if (!expect(Phase::schema) || !expect(Phase::extract)) return;
    }
    while (i < st.size() && st[i].phase == Phase::reason) {
      const StepRecord& r = st[i++];
      if (!r.action) {
        // A ReAct step whose output never parsed records no action.
        if (t.method == Method::react) continue;
        v.push_back("phase grammar: " + at_step(i - 1, r) + " has no action");
        return;
      }
      if (is_final(r)) {
        if (!expect(Phase::final)) return;
        break;
      }
      if (t.method == Method::iecache) {
        if (!is_seek(r)) {
          v.push_back("phase grammar: " + at_step(i - 1, r) + " has a non-seek action");
          return;
        }
        if (!expect(Phase::extract)) return;
        if (i < st.size() && st[i].phase == Phase::update) ++i;
        if (i < st.size() && st[i].phase == Phase::check) ++i;
      }
    }
    if (i < st.size() && (i == 0 || st[i - 1].phase != Phase::final)) {
      if (!expect(Phase::fallback)) return;
    } else if (complete && (st.empty() || (st.back().phase != Phase::final && st.back().phase != Phase::fallback))) {
      v.push_back("phase grammar: run does not end in final or fallback");
      return;
    }
  }
  if (i < st.size()) v.push_back("phase grammar: unexpected " + at_step(i, st[i]) + " after the run ended");
}

}  // namespace

std::vector<std::string> trace_violations(const RunTrace& t) {
  std::vector<std::string> v;
  const bool complete = !t.error.has_value();
  if (complete && !t.terminated_by) v.push_back("header: terminated_by missing for a completed run");

  check_grammar(t, complete, v);

  if (t.terminated_by && !t.steps.empty()) {
    const bool fallback_last = t.steps.back().phase == Phase::fallback;
    if ((*t.terminated_by == TerminatedBy::step_limit) != fallback_last) {
      v.push_back("termination: terminated_by=" + std::string(to_string(*t.terminated_by)) +
                  " but last phase is " + std::string(to_string(t.steps.back().phase)));
    }
  }

  for (std::size_t i = 1; i < t.steps.size(); ++i) {
    if (t.steps[i].step < t.steps[i - 1].step) v.push_back("step numbers decrease at " + at_step(i, t.steps[i]));
  }

  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.cache_digest.has_value() != s.cache_rendering.has_value()) {
      v.push_back("digest: " + at_step(i, s) + " has a digest without a rendering or vice versa");
    } else if (s.cache_digest && sha256_hex(*s.cache_rendering) != *s.cache_digest) {
      v.push_back("digest: " + at_step(i, s) + " digest does not match its cache rendering");
    }
  }

  if (t.config.contains("max_steps") && t.config["max_steps"].is_number_integer() &&
      t.config["max_steps"].get<long long>() >= 0) {
    const auto limit = t.config["max_steps"].get<std::size_t>();
    if (t.count(Phase::reason) > limit) {
      v.push_back("step bound: " + std::to_string(t.count(Phase::reason)) + " reason phases exceed max_steps " +
                  std::to_string(limit));
    }
  }

  if (t.method == Method::iecache && t.config.value("update_enabled", true) == false) {
    std::optional<std::string> baseline;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto& s = t.steps[i];
      if (!s.cache_digest) continue;
      if (!baseline) {
        baseline = s.cache_digest;
      } else if (*s.cache_digest != *baseline) {
        v.push_back("ablation: " + at_step(i, s) + " cache digest differs from the post-init digest");
      }
    }
  }

  if (t.method == Method::react) {
    std::optional<std::string> prev;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto& s = t.steps[i];
      if (!s.cache_rendering) continue;
      if (prev && s.cache_rendering->compare(0, prev->size(), *prev) != 0) {
        v.push_back("scratchpad: " + at_step(i, s) + " rewrites earlier scratchpad content");
      }
      prev = s.cache_rendering;
    }
  }
  return v;
}

void validate_trace(const RunTrace& trace) {
  auto v = trace_violations(trace);
  if (!v.empty()) throw ValidationError(std::move(v));
}

std::string summarize_trace(const RunTrace& t) {
  std::ostringstream out;
  out << "task " << t.task_id << " method " << to_string(t.method) << " terminated_by "
      << (t.terminated_by ? std::string(to_string(*t.terminated_by)) : std::string("aborted")) << "\n";
  for (const auto& s : t.steps) {
    out << "  step " << s.step << "  " << to_string(s.phase);
    if (s.action) out << "  " << render_action(*s.action);
    if (s.cache_digest) out << "  cache=" << s.cache_size << " digest=" << s.cache_digest->substr(0, 12);
    out << "  calls=" << s.model_calls;
    if (!s.warnings.empty()) out << "  warnings=" << s.warnings.size();
    out << "\n";
  }
  out << "answer: " << t.answer << "\n";
  if (t.error) out << "error: " << *t.error << "\n";
  return out.str();
}

}  // namespace iecache
