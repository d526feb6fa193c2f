// SPDX-License-Identifier: Apache-2.0
#include "iecache/extraction.hpp"

#include <exception>

#include "iecache/chunking.hpp"
#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/json_scan.hpp"
#include "iecache/prompts.hpp"
#include "iecache/repair.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;

namespace {

struct ChunkRows {
  std::vector<RecordRow> rows;
  std::vector<SchemaSlot> new_slots;  // proposed focus slots, in order
};

struct ChunkOutcome {
  ChunkRows parsed;
  std::string output;
  std::size_t calls = 0;
  Warnings warnings;
  std::exception_ptr error;
};

// Accepts either a plain row array or, when focus slots are allowed, an
// object {"new_slots": [...], "rows": [...]}.
ChunkRows parse_chunk_output(const std::string& out, const ExtractionSchema& schema, bool allow_new_slots,
                             const ExtractionOptions& options, Warnings& warnings) {
  if (allow_new_slots) {
    auto obj = find_object_with_key(out, "rows");
    auto arr = find_object_array(out);
    if (obj && obj->value["rows"].is_array() && (!arr || obj->begin < arr->begin)) {
      ChunkRows result;
      ExtractionSchema extended = schema;
      if (obj->value.contains("new_slots") && obj->value["new_slots"].is_array() &&
          !obj->value["new_slots"].empty()) {
        Warnings slot_warnings;
        try {
          auto proposed = parse_schema_json(obj->value["new_slots"], slot_warnings, options.max_slots);
          for (auto& s : proposed.slots) {
            if (extended.has(s.name)) continue;
            result.new_slots.push_back(s);
            extended.slots.push_back(std::move(s));
          }
        } catch (const SchemaParseError& e) {
          slot_warnings.push_back(std::string("extraction: ignored proposed slots: ") + e.what());
        }
        warnings.insert(warnings.end(), slot_warnings.begin(), slot_warnings.end());
      }
      result.rows = parse_records_json(obj->value["rows"], extended, warnings);
      return result;
    }
  }
  return ChunkRows{parse_records(out, schema, warnings), {}};
}

}  // namespace

ExtractionResult extract(std::string_view query, const ExtractionSchema& schema, std::string_view text,
                         const std::optional<std::string>& focus, Gateway& model, const PromptSet& prompts,
                         const ExtractionOptions& options) {
  schema.validate(schema.origin == SchemaOrigin::focus_extended ? options.max_slots + options.max_focus_slots
                                                                : options.max_slots);
  if (text::trim(text).empty()) throw Error("extract: empty text");

  const auto chunks = chunk_text(text, options.chunk_token_budget, options.chunk_overlap_tokens);
  const bool allow_new_slots = options.allow_focus_slots && focus.has_value();
  const std::string focus_line = focus ? "FOCUS: " + *focus + "\n" : std::string();
  std::string instructions = prompts.extraction;
  if (allow_new_slots) instructions += prompts.extraction_focus_slots;
  const std::string schema_text = render_schema(schema);

  std::vector<ChunkOutcome> outcomes(chunks.size());
  const int n = static_cast<int>(chunks.size());
  const int width = static_cast<int>(std::max<std::size_t>(options.parallel_width, 1));

#pragma omp parallel for num_threads(width) schedule(dynamic, 1) if (width > 1)
  for (int i = 0; i < n; ++i) {
    auto& oc = outcomes[i];
    try {
      std::vector<Message> messages{
          {Role::system, prompts.system},
          {Role::user, render_template(instructions, {{"query", std::string(query)},
                                                      {"focus_line", focus_line},
                                                      {"schema", schema_text},
                                                      {"chunk", chunks[i].text}})}};
      Warnings parse_warnings;
      auto outcome = call_with_repair<ChunkRows>(
          model, std::move(messages),
          [&](const std::string& out) {
            parse_warnings.clear();
            return parse_chunk_output(out, schema, allow_new_slots, options, parse_warnings);
          },
          options.repair_retries, prompts, "a JSON array of objects keyed by schema field name");
      oc.output = std::move(outcome.last_output);
      oc.calls = outcome.model_calls;
      oc.warnings = std::move(outcome.warnings);
      if (outcome.value) {
        oc.parsed = std::move(*outcome.value);
        oc.warnings.insert(oc.warnings.end(), parse_warnings.begin(), parse_warnings.end());
      } else {
        oc.warnings.push_back("extraction: chunk " + std::to_string(i) + " yielded no rows after repairs");
      }
    } catch (...) {
      oc.error = std::current_exception();
    }
  }

  ExtractionResult result;
  result.records.schema = schema;
  result.records.focus = focus;

  // Focus slots are accepted in chunk order up to the configured limit.
  std::size_t added_slots = 0;
  for (auto& oc : outcomes) {
    if (oc.error) std::rethrow_exception(oc.error);
    for (auto& slot : oc.parsed.new_slots) {
      if (result.records.schema.has(slot.name)) continue;
      if (added_slots >= options.max_focus_slots ||
          result.records.schema.slots.size() >= options.max_slots + options.max_focus_slots) {
        result.warnings.push_back("extraction: dropped extra focus slot \"" + slot.name + "\"");
        continue;
      }
      result.records.schema.slots.push_back(slot);
      result.records.schema.origin = SchemaOrigin::focus_extended;
      ++added_slots;
    }
  }

  std::vector<RecordRow> rows;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& oc = outcomes[i];
    if (i > 0) result.model_output += "\n";
    result.model_output += oc.output;
    result.model_calls += oc.calls;
    result.warnings.insert(result.warnings.end(), oc.warnings.begin(), oc.warnings.end());
    for (auto& row : oc.parsed.rows) {
      for (auto it = row.values.begin(); it != row.values.end();) {
        it = result.records.schema.has(it->first) ? std::next(it) : row.values.erase(it);
      }
      conform_row(row, result.records.schema);
      row.source_chunk = i;
      rows.push_back(std::move(row));
    }
  }

  rows = dedupe_rows(std::move(rows), result.records.schema);
  if (rows.size() > options.max_rows) {
    result.warnings.push_back("extraction: truncated " + std::to_string(rows.size()) + " rows to " +
                              std::to_string(options.max_rows));
    rows.resize(options.max_rows);
  }
  result.records.rows = std::move(rows);
  return result;
}

ExtractionResult extract_monolithic(std::string_view query, std::string_view text, Gateway& model,
                                    const PromptSet& prompts, const ExtractionOptions& options) {
  if (text::trim(text).empty()) throw Error("extract_monolithic: empty text");
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.monolithic, {{"query", std::string(query)}, {"text", std::string(text)}})}};

  struct Parsed {
    ExtractionSchema schema;
    std::vector<RecordRow> rows;
  };
  Warnings parse_warnings;
  auto outcome = call_with_repair<Parsed>(
      model, std::move(messages),
      [&](const std::string& out) {
        parse_warnings.clear();
        auto slots = find_object_array(out);
        if (!slots) throw RecordParseError("no slot array found");
        Parsed p{parse_schema_json(slots->value, parse_warnings, options.max_slots), {}};
        auto rows = find_object_array(out, slots->end);
        if (!rows) throw RecordParseError("no record array after the slot array");
        p.rows = parse_records_json(rows->value, p.schema, parse_warnings);
        return p;
      },
      options.repair_retries, prompts, "a JSON slot array followed by a JSON record array");

  ExtractionResult result;
  result.model_output = outcome.last_output;
  result.model_calls = outcome.model_calls;
  result.warnings = std::move(outcome.warnings);
  if (!outcome.value) {
    // Salvage the slot array alone when the rows never parsed.
    Warnings salvage_warnings;
    auto slots = find_object_array(result.model_output);
    if (!slots) throw SchemaParseError("monolithic extraction produced no slot array: " + outcome.last_error);
    outcome.value.emplace(Parsed{parse_schema_json(slots->value, salvage_warnings, options.max_slots), {}});
    result.warnings.insert(result.warnings.end(), salvage_warnings.begin(), salvage_warnings.end());
    result.warnings.push_back("extraction: monolithic rows unparseable, continuing with zero rows");
  } else {
    result.warnings.insert(result.warnings.end(), parse_warnings.begin(), parse_warnings.end());
  }

  result.records.schema = std::move(outcome.value->schema);
  result.records.schema.origin = SchemaOrigin::induced;
  auto rows = dedupe_rows(std::move(outcome.value->rows), result.records.schema);
  for (auto& r : rows) r.source_chunk = 0;
  if (rows.size() > options.max_rows) {
    result.warnings.push_back("extraction: truncated " + std::to_string(rows.size()) + " rows to " +
                              std::to_string(options.max_rows));
    rows.resize(options.max_rows);
  }
  result.records.rows = std::move(rows);
  return result;
}

}  // namespace iecache
