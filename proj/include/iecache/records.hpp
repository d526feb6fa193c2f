// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "iecache/schema.hpp"

namespace iecache {

struct DateTime {
  std::string value;  // whitespace-normalised text
  bool operator==(const DateTime&) const = default;
};

using Cell = std::variant<std::monostate, std::string, double, DateTime, bool>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct RecordRow {
  std::map<std::string, Cell> values;  // every schema slot present; null when missing
  std::optional<std::size_t> source_chunk;

  const Cell& at(const std::string& slot) const;
  bool operator==(const RecordRow&) const = default;
};

inline constexpr std::size_t kDefaultMaxRowsPerExtraction = 50;

struct RecordSet {
  ExtractionSchema schema;
  std::vector<RecordRow> rows;
  std::optional<std::string> focus;
};

// Shortest round-trip decimal in plain (non-exponent) notation; "3" for 3.0.
std::string canonical_number(double value);

// Cell as plain text: null -> "", numbers canonical, booleans true/false.
std::string cell_text(const Cell& cell);

nlohmann::ordered_json cell_to_json(const Cell& cell);

// Coerces a JSON value to `kind`. When coercion fails the value is kept as
// text and `coerced` is set to false.
Cell coerce_cell(const nlohmann::json& value, ValueKind kind, bool* coerced = nullptr);

// Builds a schema-conformant row from a JSON object. Keys are matched after
// slot-name normalisation; unknown keys are dropped with a warning.
RecordRow row_from_json(const nlohmann::json& object, const ExtractionSchema& schema, Warnings& warnings);

nlohmann::ordered_json row_to_json(const RecordRow& row, const ExtractionSchema& schema);
nlohmann::ordered_json rows_to_json(const std::vector<RecordRow>& rows, const ExtractionSchema& schema);

// First well-formed object array in `text`, coerced against `schema`.
// Throws RecordParseError when there is none.
std::vector<RecordRow> parse_records(std::string_view text, const ExtractionSchema& schema,
                                     Warnings& warnings);
std::vector<RecordRow> parse_records_json(const nlohmann::json& array, const ExtractionSchema& schema,
                                          Warnings& warnings);

// Dedupe key: slots in schema order, text lowercased with whitespace
// collapsed, nulls empty, numbers canonical.
std::string normalize_row(const RecordRow& row, const ExtractionSchema& schema);

// Keeps the first row for each normalize_row key.
std::vector<RecordRow> dedupe_rows(std::vector<RecordRow> rows, const ExtractionSchema& schema);

// Adds null cells for slots missing from `row` (after a schema extension).
void conform_row(RecordRow& row, const ExtractionSchema& schema);

}  // namespace iecache
