// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace iecache {

class Gateway;
struct PromptSet;

using Warnings = std::vector<std::string>;

enum class ValueKind { text, number, datetime, boolean };

std::string_view to_string(ValueKind kind);

// Maps a free-form kind label onto a ValueKind. Unknown labels map to text and
// set `known` to false.
ValueKind value_kind_from_label(std::string_view label, bool* known = nullptr);

struct SchemaSlot {
  std::string name;
  std::string description;
  ValueKind kind = ValueKind::text;

  bool operator==(const SchemaSlot&) const = default;
};

enum class SchemaOrigin { induced, gold, focus_extended };

std::string_view to_string(SchemaOrigin origin);

inline constexpr std::size_t kDefaultMaxSlots = 12;

struct ExtractionSchema {
  std::vector<SchemaSlot> slots;
  SchemaOrigin origin = SchemaOrigin::induced;

  const SchemaSlot* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

  // Throws SchemaParseError when slot names collide, are not identifiers, or
  // the slot count is outside 1..max_slots.
  void validate(std::size_t max_slots = kDefaultMaxSlots) const;

  bool operator==(const ExtractionSchema&) const = default;
};

// Lowercase snake form: non-alphanumerics become '_', runs collapse, edge
// underscores are dropped. Returns nullopt when the result does not start
// with a letter.
std::optional<std::string> normalize_slot_name(std::string_view raw);

// Canonical JSON rendering: [{"name","description","kind"}, ...].
std::string render_schema(const ExtractionSchema& schema);
nlohmann::json schema_to_json(const ExtractionSchema& schema);

// Lenient: first well-formed object array in `text`; names normalised,
// duplicates dropped (first wins), unknown kinds become text, truncated to
// max_slots. Each repair is noted in `warnings`.
ExtractionSchema parse_schema(std::string_view text, Warnings& warnings,
                              std::size_t max_slots = kDefaultMaxSlots);
// Lenient parse of an already-decoded slot array.
ExtractionSchema parse_schema_json(const nlohmann::json& slots, Warnings& warnings,
                                   std::size_t max_slots = kDefaultMaxSlots);

// Strict: the value must be a clean slot array; any defect throws.
ExtractionSchema schema_from_json_strict(const nlohmann::json& slots,
                                         std::size_t max_slots = kDefaultMaxSlots);

// Missing file -> NotFound; any content defect -> SchemaParseError.
ExtractionSchema load_gold_schema(const std::filesystem::path& path,
                                  std::size_t max_slots = kDefaultMaxSlots);

struct InductionResult {
  ExtractionSchema schema;
  std::string model_output;  // last raw output
  std::size_t model_calls = 0;
  Warnings warnings;
};

// One schema-induction call plus up to `repair_retries` repair calls.
// Throws SchemaParseError once repairs are exhausted.
InductionResult induce_schema(std::string_view query, Gateway& model, const PromptSet& prompts,
                              std::size_t repair_retries, std::size_t max_slots = kDefaultMaxSlots);

}  // namespace iecache
