// SPDX-License-Identifier: Apache-2.0
#include "iecache/runner.hpp"

#include <algorithm>
#include <charconv>
#include <exception>
#include <fstream>
#include <sstream>

#include "iecache/text.hpp"

namespace iecache {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key " + std::string(key) + " expects a nonnegative integer, got \"" +
                      std::string(value) + "\"");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key " + std::string(key) + " expects a number, got \"" + std::string(value) + "\"");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = text::to_lower(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("config key " + std::string(key) + " expects true or false, got \"" + std::string(value) + "\"");
}

fs::path resolve(const fs::path& base, std::string_view value) {
  fs::path p{std::string(value)};
  if (p.is_relative()) p = base / p;
  return fs::absolute(p).lexically_normal();
}

std::optional<fs::path> optional_path(const fs::path& base, std::string_view value) {
  if (value.empty() || value == "none") return std::nullopt;
  return resolve(base, value);
}

std::string show(const std::optional<fs::path>& p) { return p ? p->generic_string() : "none"; }
std::string show(bool b) { return b ? "true" : "false"; }

ItemScore mean_item(const std::vector<const ItemScore*>& runs) {
  ItemScore out;
  out.task_id = runs.front()->task_id;
  auto avg = [&](std::optional<double> ItemScore::*f) -> std::optional<double> {
    double sum = 0;
    std::size_t n = 0;
    for (const auto* r : runs) {
      if (r->*f) {
        sum += *(r->*f);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  out.em = avg(&ItemScore::em);
  out.rouge1_f = avg(&ItemScore::rouge1_f);
  out.rougeL_f = avg(&ItemScore::rougeL_f);
  out.extraction_rouge1_f = avg(&ItemScore::extraction_rouge1_f);
  out.extraction_rougeL_f = avg(&ItemScore::extraction_rougeL_f);
  for (const auto* r : runs) {
    if (r->error) {
      out.error = r->error;
      break;
    }
  }
  return out;
}

Aggregates mean_aggregates(const std::vector<MetricReport>& reports) {
  std::vector<ItemScore> rows;
  for (const auto& r : reports) {
    ItemScore s;
    s.em = r.aggregates.em;
    s.rouge1_f = r.aggregates.rouge1_f;
    s.rougeL_f = r.aggregates.rougeL_f;
    s.extraction_rouge1_f = r.aggregates.extraction_rouge1_f;
    s.extraction_rougeL_f = r.aggregates.extraction_rougeL_f;
    rows.push_back(std::move(s));
  }
  return aggregate(rows);
}

ExperimentReport assemble(Method method, std::size_t n, std::size_t repeats, std::vector<MetricReport> per_repeat) {
  ExperimentReport report;
  report.method = method;
  report.n = n;
  report.repeats = repeats;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<const ItemScore*> runs;
    for (const auto& r : per_repeat) runs.push_back(&r.per_item[i]);
    report.per_item_mean.push_back(mean_item(runs));
  }
  report.aggregates = mean_aggregates(per_repeat);
  report.per_repeat = std::move(per_repeat);
  return report;
}

struct Job {
  std::size_t task = 0;
  std::size_t repeat = 0;
  RunTrace trace;
  std::optional<std::string> answer;
  std::optional<RecordSet> records;
  std::optional<std::string> error;
  bool gateway_failure = false;
};

void execute(Job& job, const TaskInstance& task, const RunConfig& config, Gateway& gateway,
             const PromptSet& prompts) {
  try {
    RunResult r = config.method == Method::iecache ? run(task, config.agent, gateway, prompts)
                                                   : run_baseline(task, config.baseline, gateway, prompts);
    job.answer = std::move(r.answer);
    job.trace = std::move(r.trace);
    job.records = std::move(r.initial_records);
  } catch (const RunAborted& e) {
    job.trace = e.trace();
    job.error = job.trace.error.value_or(e.what());
    job.gateway_failure = true;
  } catch (const std::exception& e) {
    job.trace = RunTrace{};
    job.trace.task_id = task.id;
    job.trace.method = config.method;
    job.trace.error = e.what();
    job.error = e.what();
  }
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("no dataset given");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (parallel_workers < 1) throw ConfigError("parallel_workers must be at least 1");
  if (fixture && !profile.endpoint.empty()) {
    throw ConfigError("a fixture and a live endpoint cannot be used in the same run");
  }
  profile.validate();
  if (method == Method::iecache) {
    agent.validate();
  } else {
    BaselineConfig b = baseline;
    b.method = method;
    b.validate();
  }
}

void apply_config_value(RunConfig& c, std::string_view key, std::string_view value, const fs::path& base) {
  const std::string k(key);
  if (k == "dataset") {
    c.dataset = resolve(base, value);
  } else if (k == "method") {
    c.method = method_from_string(value);
  } else if (k == "model.name") {
    c.profile.name = std::string(value);
  } else if (k == "model.temperature") {
    c.profile.temperature = parse_real(k, value);
  } else if (k == "model.max_output_tokens") {
    c.profile.max_output_tokens = static_cast<int>(parse_count(k, value));
  } else if (k == "model.endpoint") {
    c.profile.endpoint = value == "none" ? "" : std::string(value);
  } else if (k == "model.auth_source") {
    c.profile.auth_source = std::string(value);
  } else if (k == "model.retry_limit") {
    c.profile.retry_limit = static_cast<int>(parse_count(k, value));
  } else if (k == "model.retry_base_delay_ms") {
    c.profile.retry_base_delay = std::chrono::milliseconds(parse_count(k, value));
  } else if (k == "max_steps") {
    c.agent.max_steps = parse_count(k, value);
  } else if (k == "update_enabled") {
    c.agent.update_enabled = parse_bool(k, value);
  } else if (k == "check_interval") {
    c.agent.check_interval = parse_count(k, value);
  } else if (k == "repair_retries") {
    c.agent.repair_retries = parse_count(k, value);
    c.baseline.repair_retries = c.agent.repair_retries;
  } else if (k == "monolithic") {
    c.agent.monolithic = parse_bool(k, value);
  } else if (k == "gold_schema") {
    c.agent.use_task_gold_schema = value == "task";
    c.agent.gold_schema_path = value == "task" ? std::nullopt : optional_path(base, value);
  } else if (k == "allow_focus_slots") {
    c.agent.allow_focus_slots = parse_bool(k, value);
  } else if (k == "cache_capacity") {
    c.agent.cache_capacity = parse_count(k, value);
  } else if (k == "max_slots") {
    c.agent.max_slots = parse_count(k, value);
  } else if (k == "chunk_token_budget") {
    c.agent.chunk_token_budget = parse_count(k, value);
  } else if (k == "chunk_overlap_tokens") {
    c.agent.chunk_overlap_tokens = parse_count(k, value);
  } else if (k == "max_rows_per_extraction") {
    c.agent.max_rows_per_extraction = parse_count(k, value);
  } else if (k == "extraction_width") {
    c.agent.extraction_width = parse_count(k, value);
  } else if (k == "react_max_steps") {
    c.baseline.react_max_steps = parse_count(k, value);
  } else if (k == "react_window_tokens") {
    c.baseline.react_window_tokens = parse_count(k, value);
  } else if (k == "repeats") {
    c.repeats = parse_count(k, value);
  } else if (k == "parallel_workers") {
    c.parallel_workers = parse_count(k, value);
  } else if (k == "out") {
    c.out_dir = resolve(base, value);
  } else if (k == "fixture") {
    c.fixture = optional_path(base, value);
  } else if (k == "record_fixture") {
    c.record_fixture = optional_path(base, value);
  } else if (k == "prompts_dir") {
    c.prompts_dir = optional_path(base, value);
  } else {
    throw ConfigError("unknown config key \"" + k + "\"");
  }
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  c.out_dir = resolve(base_dir, "runs/latest");
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = text::trim(line);
    if (l.empty() || l.front() == '#') continue;
    auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_value(c, text::trim(l.substr(0, eq)), text::trim(l.substr(eq + 1)), base_dir);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  return parse_config(read_file(path), fs::absolute(path).parent_path());
}

std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  o << "dataset = " << c.dataset.generic_string() << "\n";
  o << "method = " << to_string(c.method) << "\n";
  o << "model.name = " << c.profile.name << "\n";
  o << "model.temperature = " << nlohmann::json(c.profile.temperature).dump() << "\n";
  o << "model.max_output_tokens = " << c.profile.max_output_tokens << "\n";
  o << "model.endpoint = " << (c.profile.endpoint.empty() ? "none" : c.profile.endpoint) << "\n";
  o << "model.auth_source = " << c.profile.auth_source << "\n";
  o << "model.retry_limit = " << c.profile.retry_limit << "\n";
  o << "model.retry_base_delay_ms = " << c.profile.retry_base_delay.count() << "\n";
  o << "max_steps = " << c.agent.max_steps << "\n";
  o << "update_enabled = " << show(c.agent.update_enabled) << "\n";
  o << "check_interval = " << c.agent.check_interval << "\n";
  o << "repair_retries = " << c.agent.repair_retries << "\n";
  o << "monolithic = " << show(c.agent.monolithic) << "\n";
  o << "gold_schema = " << (c.agent.use_task_gold_schema ? std::string("task") : show(c.agent.gold_schema_path))
    << "\n";
  o << "allow_focus_slots = " << show(c.agent.allow_focus_slots) << "\n";
  o << "cache_capacity = " << c.agent.cache_capacity << "\n";
  o << "max_slots = " << c.agent.max_slots << "\n";
  o << "chunk_token_budget = " << c.agent.chunk_token_budget << "\n";
  o << "chunk_overlap_tokens = " << c.agent.chunk_overlap_tokens << "\n";
  o << "max_rows_per_extraction = " << c.agent.max_rows_per_extraction << "\n";
  o << "extraction_width = " << c.agent.extraction_width << "\n";
  o << "react_max_steps = " << c.baseline.react_max_steps << "\n";
  o << "react_window_tokens = " << c.baseline.react_window_tokens << "\n";
  o << "repeats = " << c.repeats << "\n";
  o << "parallel_workers = " << c.parallel_workers << "\n";
  o << "out = " << c.out_dir.generic_string() << "\n";
  o << "fixture = " << show(c.fixture) << "\n";
  o << "record_fixture = " << show(c.record_fixture) << "\n";
  o << "prompts_dir = " << show(c.prompts_dir) << "\n";
  return o.str();
}

std::string trace_file_stem(std::string_view task_id) {
  std::string out;
  for (char c : task_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty()) out = "_";
  return out;
}

fs::path trace_path(const fs::path& out_dir, std::string_view task_id, std::size_t repeat) {
  return out_dir / "traces" / (trace_file_stem(task_id) + "." + std::to_string(repeat) + ".jsonl");
}

ordered_json experiment_to_json(const ExperimentReport& r) {
  ordered_json j = ordered_json::object();
  j["method"] = std::string(to_string(r.method));
  j["n"] = r.n;
  j["repeats"] = r.repeats;
  j["aggregates"] = aggregates_to_json(r.aggregates);
  MetricReport mean_report;
  mean_report.per_item = r.per_item_mean;
  mean_report.n = r.n;
  j["per_item"] = report_to_json(mean_report)["per_item"];
  ordered_json runs = ordered_json::array();
  for (std::size_t i = 0; i < r.per_repeat.size(); ++i) {
    ordered_json one = report_to_json(r.per_repeat[i]);
    ordered_json run = ordered_json::object();
    run["repeat"] = i;
    for (auto& [k, v] : one.items()) run[k] = v;
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  return j;
}

std::string experiment_table(const ExperimentReport& r, const std::vector<std::string>& metrics) {
  MetricReport view;
  view.per_item = r.per_item_mean;
  view.n = r.n;
  view.aggregates = r.aggregates;
  std::string out = "method: " + std::string(to_string(r.method)) + "  repeats: " + std::to_string(r.repeats) +
                    "  (scores x100, per-item values averaged over repeats)\n";
  return out + report_table(view, metrics);
}

std::shared_ptr<ModelBackend> make_backend(const RunConfig& config) {
  if (config.fixture) return ScriptedBackend::from_fixture(*config.fixture);
  return std::make_shared<HttpBackend>(config.profile);
}

ExperimentReport run_experiment(const RunConfig& input) {
  input.validate();
  RunConfig config = input;
  const auto tasks = load_dataset(config.dataset);
  const PromptSet prompts = config.prompts_dir ? PromptSet::load_overrides(*config.prompts_dir) : PromptSet::defaults();

  // Scripted replies and recorded transcripts are order-sensitive.
  const bool ordered = config.fixture.has_value() || config.record_fixture.has_value();
  std::size_t workers = ordered ? 1 : config.parallel_workers;
  if (ordered) config.agent.extraction_width = 1;

  Gateway gateway(make_backend(config), config.profile);
  if (config.record_fixture) gateway.set_recording(true);

  std::vector<Job> jobs;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t r = 0; r < config.repeats; ++r) {
      Job j;
      j.task = t;
      j.repeat = r;
      jobs.push_back(std::move(j));
    }
  }
  const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, workers));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t i = 0; i < n_jobs; ++i) {
    auto& job = jobs[static_cast<std::size_t>(i)];
    execute(job, tasks[job.task], config, gateway, prompts);
  }

  fs::create_directories(config.out_dir / "traces");
  std::vector<std::vector<ScoreInput>> inputs(config.repeats);
  for (auto& v : inputs) v.resize(tasks.size());
  std::size_t failures = 0;
  std::size_t gateway_failures = 0;
  std::string first_error;
  for (auto& job : jobs) {
    write_trace(job.trace, trace_path(config.out_dir, tasks[job.task].id, job.repeat));
    const auto& task = tasks[job.task];
    ScoreInput& in = inputs[job.repeat][job.task];
    in.task_id = task.id;
    in.prediction = job.answer;
    in.golds = task.golds;
    in.error = job.error;
    if (job.records && task.gold_table) {
      in.records = &*job.records;
      in.gold_table = &*task.gold_table;
    }
    if (job.error) {
      ++failures;
      if (job.gateway_failure) ++gateway_failures;
      if (first_error.empty()) first_error = *job.error;
    }
  }

  std::vector<MetricReport> per_repeat;
  for (const auto& in : inputs) {
    per_repeat.push_back(make_report(score_items(in, static_cast<int>(config.parallel_workers))));
  }
  ExperimentReport report = assemble(config.method, tasks.size(), config.repeats, std::move(per_repeat));

  write_file(config.out_dir / "report.json", experiment_to_json(report).dump(2) + "\n");
  write_file(config.out_dir / "report.txt", experiment_table(report));
  write_file(config.out_dir / "config.snapshot", render_config(input));
  if (config.record_fixture) gateway.write_fixture(*config.record_fixture);

  if (!jobs.empty() && gateway_failures == jobs.size()) {
    throw TransportError("model gateway unreachable, every run failed: " + first_error);
  }
  return report;
}

ReplayVerdict replay(const fs::path& trace_file) {
  ReplayVerdict v;
  v.trace = read_trace(trace_file);
  v.violations = trace_violations(v.trace);
  v.summary = summarize_trace(v.trace);
  return v;
}

EvalResult evaluate_run_dir(const fs::path& out_dir) {
  const RunConfig config = parse_config(read_file(out_dir / "config.snapshot"), out_dir);
  const auto tasks = load_dataset(config.dataset);
  const ordered_json persisted = ordered_json::parse(read_file(out_dir / "report.json"));
  const std::size_t repeats = persisted.value("repeats", config.repeats);

  std::vector<MetricReport> per_repeat;
  for (std::size_t r = 0; r < repeats; ++r) {
    const ordered_json* stored_items = nullptr;
    if (persisted.contains("runs") && r < persisted["runs"].size()) stored_items = &persisted["runs"][r]["per_item"];
    std::vector<ItemScore> items;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      ScoreInput in;
      in.task_id = tasks[i].id;
      in.golds = tasks[i].golds;
      const fs::path tp = trace_path(out_dir, tasks[i].id, r);
      if (!fs::exists(tp)) {
        in.error = "trace missing: " + tp.generic_string();
      } else {
        RunTrace t = read_trace(tp);
        if (t.error) {
          in.error = t.error;
        } else {
          in.prediction = t.answer;
        }
      }
      ItemScore s = score_item(in);
      // Extraction scores need the records, which only the run itself saw.
      if (stored_items && i < stored_items->size()) {
        const auto& st = (*stored_items)[i];
        if (st.contains("extraction_rouge1_f") && st["extraction_rouge1_f"].is_number()) {
          s.extraction_rouge1_f = st["extraction_rouge1_f"].get<double>();
        }
        if (st.contains("extraction_rougeL_f") && st["extraction_rougeL_f"].is_number()) {
          s.extraction_rougeL_f = st["extraction_rougeL_f"].get<double>();
        }
      }
      items.push_back(std::move(s));
    }
    per_repeat.push_back(make_report(std::move(items)));
  }
  EvalResult result;
  result.report = assemble(config.method, tasks.size(), repeats, std::move(per_repeat));
  result.matches_persisted = experiment_to_json(result.report) == persisted;
  return result;
}

}  // namespace iecache
