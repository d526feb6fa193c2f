// SPDX-License-Identifier: Apache-2.0
#include "iecache/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/json_scan.hpp"
#include "iecache/prompts.hpp"
#include "iecache/repair.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::text:
      return "text";
    case ValueKind::number:
      return "number";
    case ValueKind::datetime:
      return "datetime";
    case ValueKind::boolean:
      return "boolean";
  }
  return "text";
}

std::string_view to_string(SchemaOrigin origin) {
  switch (origin) {
    case SchemaOrigin::induced:
      return "induced";
    case SchemaOrigin::gold:
      return "gold";
    case SchemaOrigin::focus_extended:
      return "focus_extended";
  }
  return "induced";
}

ValueKind value_kind_from_label(std::string_view label, bool* known) {
  static const std::set<std::string, std::less<>> kText{"text", "string", "str"};
  static const std::set<std::string, std::less<>> kNumber{"number", "integer", "int",     "float",
                                                          "real",   "double",  "numeric", "decimal"};
  static const std::set<std::string, std::less<>> kDatetime{"datetime", "date", "time", "timestamp"};
  static const std::set<std::string, std::less<>> kBoolean{"boolean", "bool", "yes/no", "yes_no", "yesno"};

  const std::string l = text::to_lower(text::trim(label));
  if (known) *known = true;
  if (kText.count(l)) return ValueKind::text;
  if (kNumber.count(l)) return ValueKind::number;
  if (kDatetime.count(l)) return ValueKind::datetime;
  if (kBoolean.count(l)) return ValueKind::boolean;
  if (known) *known = false;
  return ValueKind::text;
}

const SchemaSlot* ExtractionSchema::find(std::string_view name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> ExtractionSchema::names() const {
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(s.name);
  return out;
}

void ExtractionSchema::validate(std::size_t max_slots) const {
  if (slots.empty()) throw SchemaParseError("schema has no slots");
  if (slots.size() > max_slots) {
    throw SchemaParseError("schema has " + std::to_string(slots.size()) + " slots, limit is " +
                           std::to_string(max_slots));
  }
  std::set<std::string> seen;
  for (const auto& s : slots) {
    if (normalize_slot_name(s.name) != s.name) throw SchemaParseError("invalid slot name \"" + s.name + "\"");
    if (!seen.insert(s.name).second) throw SchemaParseError("duplicate slot name \"" + s.name + "\"");
  }
}

std::optional<std::string> normalize_slot_name(std::string_view raw) {
  std::string out;
  for (char c : text::to_lower(raw)) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (alnum) {
      out.push_back(c);
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty() || !(out.front() >= 'a' && out.front() <= 'z')) return std::nullopt;
  return out;
}

json schema_to_json(const ExtractionSchema& schema) {
  json arr = json::array();
  for (const auto& s : schema.slots) {
    json slot = json::object();
    slot["name"] = s.name;
    slot["description"] = s.description;
    slot["kind"] = std::string(to_string(s.kind));
    arr.push_back(std::move(slot));
  }
  return arr;
}

std::string render_schema(const ExtractionSchema& schema) { return schema_to_json(schema).dump(); }

ExtractionSchema parse_schema_json(const json& slots, Warnings& warnings, std::size_t max_slots) {
  if (!slots.is_array()) throw SchemaParseError("schema must be a JSON array");
  ExtractionSchema schema;
  std::set<std::string> seen;
  for (const auto& el : slots) {
    if (!el.is_object() || !el.contains("name") || !el["name"].is_string()) {
      warnings.push_back("schema: dropped slot without a string name");
      continue;
    }
    const auto raw_name = el["name"].get<std::string>();
    auto name = normalize_slot_name(raw_name);
    if (!name) {
      warnings.push_back("schema: dropped slot with invalid name \"" + raw_name + "\"");
      continue;
    }
    if (!seen.insert(*name).second) {
      warnings.push_back("schema: dropped duplicate slot \"" + *name + "\"");
      continue;
    }
    SchemaSlot slot;
    slot.name = *name;
    if (el.contains("description") && el["description"].is_string()) {
      slot.description = el["description"].get<std::string>();
    }
    const char* kind_key = el.contains("kind") ? "kind" : (el.contains("type") ? "type" : nullptr);
    if (kind_key && el[kind_key].is_string()) {
      bool known = true;
      slot.kind = value_kind_from_label(el[kind_key].get<std::string>(), &known);
      if (!known) {
        warnings.push_back("schema: unknown kind \"" + el[kind_key].get<std::string>() + "\" for slot \"" +
                           slot.name + "\", using text");
      }
    }
    schema.slots.push_back(std::move(slot));
  }
  if (schema.slots.empty()) throw SchemaParseError("schema contains no valid slots");
  if (schema.slots.size() > max_slots) {
    warnings.push_back("schema: truncated " + std::to_string(schema.slots.size()) + " slots to " +
                       std::to_string(max_slots));
    schema.slots.resize(max_slots);
  }
  return schema;
}

ExtractionSchema parse_schema(std::string_view text, Warnings& warnings, std::size_t max_slots) {
  auto found = find_object_array(text);
  if (!found) throw SchemaParseError("no JSON slot array found");
  return parse_schema_json(found->value, warnings, max_slots);
}

ExtractionSchema schema_from_json_strict(const json& slots, std::size_t max_slots) {
  if (!slots.is_array()) throw SchemaParseError("gold schema must be a JSON array");
  ExtractionSchema schema;
  schema.origin = SchemaOrigin::gold;
  for (const auto& el : slots) {
    if (!el.is_object() || !el.contains("name") || !el["name"].is_string()) {
      throw SchemaParseError("gold schema slot needs a string \"name\"");
    }
    SchemaSlot slot;
    slot.name = el["name"].get<std::string>();
    if (el.contains("description")) {
      if (!el["description"].is_string()) throw SchemaParseError("slot description must be a string");
      slot.description = el["description"].get<std::string>();
    }
    if (el.contains("kind")) {
      if (!el["kind"].is_string()) throw SchemaParseError("slot kind must be a string");
      bool known = true;
      slot.kind = value_kind_from_label(el["kind"].get<std::string>(), &known);
      if (!known) throw SchemaParseError("unknown slot kind \"" + el["kind"].get<std::string>() + "\"");
    }
    schema.slots.push_back(std::move(slot));
  }
  schema.validate(max_slots);
  return schema;
}

ExtractionSchema load_gold_schema(const std::filesystem::path& path, std::size_t max_slots) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("gold schema not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw SchemaParseError("gold schema is not valid JSON: " + path.string());
  return schema_from_json_strict(doc, max_slots);
}

InductionResult induce_schema(std::string_view query, Gateway& model, const PromptSet& prompts,
                              std::size_t repair_retries, std::size_t max_slots) {
  if (text::trim(query).empty()) throw Error("induce_schema: empty query");
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.schema_induction,
                                   {{"query", std::string(query)}, {"max_slots", std::to_string(max_slots)}})}};

  Warnings parse_warnings;
  auto outcome = call_with_repair<ExtractionSchema>(
      model, std::move(messages),
      [&](const std::string& out) {
        parse_warnings.clear();
        return parse_schema(out, parse_warnings, max_slots);
      },
      repair_retries, prompts, "a JSON array of {\"name\", \"description\", \"kind\"} objects");

  if (!outcome.value) {
    throw SchemaParseError("schema induction failed after " + std::to_string(outcome.model_calls) +
                           " calls: " + outcome.last_error);
  }
  InductionResult result{std::move(*outcome.value), std::move(outcome.last_output), outcome.model_calls,
                         std::move(outcome.warnings)};
  result.schema.origin = SchemaOrigin::induced;
  result.warnings.insert(result.warnings.end(), parse_warnings.begin(), parse_warnings.end());
  return result;
}

}  // namespace iecache
