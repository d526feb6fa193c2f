// SPDX-License-Identifier: Apache-2.0
#include "iecache/datasets.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "iecache/errors.hpp"
#include "iecache/records.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::qa:
      return "qa";
    case TaskFamily::planning:
      return "planning";
    case TaskFamily::summarization:
      return "summarization";
  }
  return "qa";
}

TaskFamily task_family_from_string(std::string_view s) {
  if (s == "qa") return TaskFamily::qa;
  if (s == "planning") return TaskFamily::planning;
  if (s == "summarization") return TaskFamily::summarization;
  throw Error("unknown task family \"" + std::string(s) + "\"");
}

namespace {

std::string cell_from_json(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return canonical_number(v.get<double>());
  return v.dump();
}

std::string required_text(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw Error(std::string("missing string field \"") + key + "\"");
  std::string v = j[key].get<std::string>();
  if (text::trim(v).empty()) throw Error(std::string("field \"") + key + "\" is empty");
  return v;
}

}  // namespace

GoldTable gold_table_from_json(const json& j) {
  if (!j.is_object() || !j.contains("slots") || !j["slots"].is_array() || !j.contains("rows") ||
      !j["rows"].is_array()) {
    throw Error("gold_table needs \"slots\" and \"rows\" arrays");
  }
  GoldTable t;
  for (const auto& s : j["slots"]) {
    if (!s.is_string()) throw Error("gold_table slots must be strings");
    t.slots.push_back(s.get<std::string>());
  }
  const std::set<std::string> slot_set(t.slots.begin(), t.slots.end());
  if (slot_set.size() != t.slots.size()) throw Error("gold_table slots repeat");
  for (const auto& r : j["rows"]) {
    std::vector<std::string> row;
    if (r.is_array()) {
      if (r.size() != t.slots.size()) throw Error("gold_table row width differs from slot count");
      for (const auto& c : r) row.push_back(cell_from_json(c));
    } else if (r.is_object()) {
      if (r.size() != t.slots.size()) throw Error("gold_table row keys differ from slots");
      for (const auto& s : t.slots) {
        if (!r.contains(s)) throw Error("gold_table row lacks slot \"" + s + "\"");
        row.push_back(cell_from_json(r[s]));
      }
    } else {
      throw Error("gold_table rows must be arrays or objects");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ordered_json gold_table_to_json(const GoldTable& table) {
  ordered_json j = ordered_json::object();
  j["slots"] = table.slots;
  j["rows"] = table.rows;
  return j;
}

TaskInstance task_from_json(const json& j) {
  if (!j.is_object()) throw Error("record must be a JSON object");
  TaskInstance t;
  t.id = required_text(j, "id");
  t.family = task_family_from_string(required_text(j, "family"));
  t.query = required_text(j, "query");
  t.text = required_text(j, "text");
  if (!j.contains("golds") || !j["golds"].is_array() || j["golds"].empty()) {
    throw Error("\"golds\" must be a nonempty array");
  }
  for (const auto& g : j["golds"]) {
    if (!g.is_string()) throw Error("\"golds\" entries must be strings");
    t.golds.push_back(g.get<std::string>());
  }
  if (j.contains("gold_schema") && !j["gold_schema"].is_null()) {
    try {
      t.gold_schema = schema_from_json_strict(j["gold_schema"]);
    } catch (const SchemaParseError& e) {
      throw Error(std::string("gold_schema: ") + e.what());
    }
  }
  if (j.contains("gold_table") && !j["gold_table"].is_null()) t.gold_table = gold_table_from_json(j["gold_table"]);
  return t;
}

ordered_json task_to_json(const TaskInstance& t) {
  ordered_json j = ordered_json::object();
  j["id"] = t.id;
  j["family"] = std::string(to_string(t.family));
  j["query"] = t.query;
  j["text"] = t.text;
  j["golds"] = t.golds;
  if (t.gold_schema) j["gold_schema"] = ordered_json::parse(render_schema(*t.gold_schema));
  if (t.gold_table) j["gold_table"] = gold_table_to_json(*t.gold_table);
  return j;
}

std::vector<TaskInstance> parse_dataset(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<TaskInstance> tasks;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DatasetFormatError(line_no, "malformed JSON");
    TaskInstance t;
    try {
      t = task_from_json(j);
    } catch (const Error& e) {
      throw DatasetFormatError(line_no, e.what());
    }
    if (!ids.insert(t.id).second) throw DuplicateId(t.id);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("dataset not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

void write_dataset(const std::vector<TaskInstance>& tasks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset: " + path.string());
  for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

}  // namespace iecache
