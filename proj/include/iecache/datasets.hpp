// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iecache/schema.hpp"

namespace iecache {

enum class TaskFamily { qa, planning, summarization };

std::string_view to_string(TaskFamily family);
TaskFamily task_family_from_string(std::string_view s);

// Gold reference extraction for one task. Cells are stored as text.
struct GoldTable {
  std::vector<std::string> slots;
  std::vector<std::vector<std::string>> rows;  // each row aligned with `slots`

  bool operator==(const GoldTable&) const = default;
};

struct TaskInstance {
  std::string id;
  TaskFamily family = TaskFamily::qa;
  std::string query;
  std::string text;
  std::vector<std::string> golds;
  std::optional<ExtractionSchema> gold_schema;
  std::optional<GoldTable> gold_table;
};

// Canonical JSONL record:
// {"id","family","query","text","golds":[..],"gold_schema"?:[..],"gold_table"?:{"slots":[..],"rows":[..]}}
TaskInstance task_from_json(const nlohmann::json& j);  // throws Error on any defect
nlohmann::ordered_json task_to_json(const TaskInstance& task);

// Rows may be arrays aligned with slots or objects keyed by slot.
GoldTable gold_table_from_json(const nlohmann::json& j);
nlohmann::ordered_json gold_table_to_json(const GoldTable& table);

// Throws NotFound, DatasetFormatError (with line) or DuplicateId.
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path);
std::vector<TaskInstance> parse_dataset(std::string_view jsonl);
void write_dataset(const std::vector<TaskInstance>& tasks, const std::filesystem::path& path);

enum class SourceFormat { tact, calendar, qmsum };
SourceFormat source_format_from_string(std::string_view s);

// Converts a public release file into canonical JSONL and returns the number
// of records written. Expected layouts are documented in adapters.cpp.
std::size_t adapt(SourceFormat format, const std::filesystem::path& input, const std::filesystem::path& output);
std::vector<TaskInstance> adapt_records(SourceFormat format, std::string_view content,
                                        std::string_view source_name);

}  // namespace iecache
