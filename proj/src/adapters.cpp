// SPDX-License-Identifier: Apache-2.0
//
// Converters from public benchmark releases to the canonical task format.
// The datasets themselves are not shipped; point the adapters at your copy.
//
// qmsum     Yale-LILY/QMSum, tag v1.0 (data/ALL/jsonl/{train,val,test}.jsonl).
//           One meeting per line:
//             {"topic_list": [...],
//              "general_query_list":  [{"query", "answer"}],
//              "specific_query_list": [{"query", "answer", "relevant_text_span"}],
//              "meeting_transcripts": [{"speaker", "content"}]}
//           Every query becomes one summarization task over the flattened
//           transcript ("speaker: content" per turn).
//
// calendar  google-deepmind/natural-plan, tag v1.0 (data/calendar_scheduling.json).
//           One JSON object keyed by example id; each value carries
//           "prompt_0shot" and "golden_plan". The TASK section of the prompt
//           becomes the raw text and the gold is the "Day, HH:MM - HH:MM"
//           string found in golden_plan.
//
// tact      JSONL, one item per line:
//             {"id"?, "question" | "instruction", "text", "answer",
//              "table"?: CSV text | {"columns": [...], "rows": [[...]]}}
//           The table, when present, becomes gold_table and its header the
//           gold_schema.
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "iecache/datasets.hpp"
#include "iecache/errors.hpp"
#include "iecache/records.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;

SourceFormat source_format_from_string(std::string_view s) {
  if (s == "tact") return SourceFormat::tact;
  if (s == "calendar") return SourceFormat::calendar;
  if (s == "qmsum") return SourceFormat::qmsum;
  throw ConfigError("unknown source format \"" + std::string(s) + "\" (expected tact, calendar or qmsum)");
}

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      cell.push_back(c);
    }
  }
  if (any) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string first_string(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
  }
  return "";
}

std::vector<TaskInstance> adapt_tact(std::string_view content, std::string_view source) {
  std::vector<TaskInstance> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string fallback_id = std::string(source) + "-" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw AdapterError(fallback_id, "not a JSON object");
    TaskInstance t;
    t.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()) : fallback_id;
    t.family = TaskFamily::qa;
    t.query = first_string(j, {"question", "instruction", "query"});
    t.text = first_string(j, {"text", "context"});
    if (t.query.empty() || t.text.empty()) throw AdapterError(t.id, "needs question and text");
    if (!j.contains("answer")) throw AdapterError(t.id, "missing answer");
    if (j["answer"].is_array()) {
      for (const auto& a : j["answer"]) t.golds.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    } else {
      t.golds.push_back(j["answer"].is_string() ? j["answer"].get<std::string>() : j["answer"].dump());
    }
    if (t.golds.empty()) throw AdapterError(t.id, "empty answer list");

    if (j.contains("table") && !j["table"].is_null()) {
      std::vector<std::vector<std::string>> grid;
      if (j["table"].is_string()) {
        grid = parse_csv(j["table"].get<std::string>());
      } else if (j["table"].is_object() && j["table"].contains("columns")) {
        std::vector<std::string> header;
        for (const auto& c : j["table"]["columns"]) header.push_back(c.is_string() ? c.get<std::string>() : c.dump());
        grid.push_back(std::move(header));
        for (const auto& r : j["table"].value("rows", json::array())) {
          std::vector<std::string> row;
          for (const auto& c : r) row.push_back(c.is_string() ? c.get<std::string>() : c.dump());
          grid.push_back(std::move(row));
        }
      } else {
        throw AdapterError(t.id, "unsupported table layout");
      }
      if (grid.empty()) throw AdapterError(t.id, "table has no header");
      GoldTable table;
      ExtractionSchema schema;
      schema.origin = SchemaOrigin::gold;
      for (const auto& col : grid.front()) {
        auto name = normalize_slot_name(col);
        if (!name || schema.has(*name)) throw AdapterError(t.id, "unusable table column \"" + col + "\"");
        table.slots.push_back(*name);
        schema.slots.push_back(SchemaSlot{*name, "column \"" + col + "\" of the reference table", ValueKind::text});
      }
      for (std::size_t r = 1; r < grid.size(); ++r) {
        if (grid[r].size() != table.slots.size()) throw AdapterError(t.id, "ragged table row " + std::to_string(r));
        table.rows.push_back(grid[r]);
      }
      if (schema.slots.size() <= kDefaultMaxSlots) t.gold_schema = std::move(schema);
      t.gold_table = std::move(table);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TaskInstance> adapt_calendar(std::string_view content) {
  std::vector<TaskInstance> out;
  if (text::trim(content).empty()) return out;
  json doc = json::parse(content, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw AdapterError("<file>", "expected a JSON object keyed by id");
  static const std::regex kPlan(R"(([A-Za-z]+),\s*(\d{1,2}:\d{2})\s*-\s*(\d{1,2}:\d{2}))");
  for (const auto& [id, item] : doc.items()) {
    const std::string prompt = first_string(item, {"prompt_0shot"});
    const std::string plan = first_string(item, {"golden_plan"});
    if (prompt.empty() || plan.empty()) throw AdapterError(id, "needs prompt_0shot and golden_plan");

    auto task_pos = prompt.rfind("TASK:");
    if (task_pos == std::string::npos) throw AdapterError(id, "prompt has no TASK section");
    std::string body = prompt.substr(task_pos + 5);
    if (auto sol = body.find("SOLUTION:"); sol != std::string::npos) body.resize(sol);

    std::smatch m;
    if (!std::regex_search(plan, m, kPlan)) throw AdapterError(id, "golden_plan has no \"Day, HH:MM - HH:MM\"");

    TaskInstance t;
    t.id = id;
    t.family = TaskFamily::planning;
    const std::string task_text(text::trim(body));
    const auto first_break = task_text.find('\n');
    t.query = std::string(text::trim(task_text.substr(0, first_break))) +
              " Find a time that works for everyone's schedule and constraints.";
    t.text = task_text;
    t.golds.push_back(m[1].str() + ", " + m[2].str() + " - " + m[3].str());
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TaskInstance> adapt_qmsum(std::string_view content, std::string_view source) {
  std::vector<TaskInstance> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string meeting_id = std::string(source) + "-" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw AdapterError(meeting_id, "not a JSON object");
    if (!j.contains("meeting_transcripts") || !j["meeting_transcripts"].is_array()) {
      throw AdapterError(meeting_id, "missing meeting_transcripts");
    }
    std::string transcript;
    for (const auto& turn : j["meeting_transcripts"]) {
      if (!transcript.empty()) transcript += '\n';
      transcript += first_string(turn, {"speaker"}) + ": " + text::collapse_whitespace(first_string(turn, {"content"}));
    }
    if (text::trim(transcript).empty()) throw AdapterError(meeting_id, "empty transcript");

    auto add_queries = [&](const char* key, const char* tag) {
      if (!j.contains(key)) return;
      std::size_t k = 0;
      for (const auto& q : j[key]) {
        const std::string id = meeting_id + "-" + tag + std::to_string(k++);
        TaskInstance t;
        t.id = id;
        t.family = TaskFamily::summarization;
        t.query = first_string(q, {"query"});
        const std::string answer = first_string(q, {"answer"});
        if (t.query.empty() || answer.empty()) throw AdapterError(id, "query without query/answer text");
        t.text = transcript;
        t.golds.push_back(answer);
        out.push_back(std::move(t));
      }
    };
    add_queries("general_query_list", "g");
    add_queries("specific_query_list", "s");
  }
  return out;
}

}  // namespace

std::vector<TaskInstance> adapt_records(SourceFormat format, std::string_view content, std::string_view source_name) {
  switch (format) {
    case SourceFormat::tact:
      return adapt_tact(content, source_name);
    case SourceFormat::calendar:
      return adapt_calendar(content);
    case SourceFormat::qmsum:
      return adapt_qmsum(content, source_name);
  }
  return {};
}

std::size_t adapt(SourceFormat format, const std::filesystem::path& input, const std::filesystem::path& output) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw NotFound("adapter input not found: " + input.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto tasks = adapt_records(format, buf.str(), input.stem().string());
  // Round-trip every record through the canonical validator before writing.
  std::string jsonl;
  for (const auto& t : tasks) jsonl += task_to_json(t).dump() + "\n";
  parse_dataset(jsonl);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write adapter output: " + output.string());
  out << jsonl;
  return tasks.size();
}

}  // namespace iecache
