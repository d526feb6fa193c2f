// SPDX-License-Identifier: Apache-2.0
#include "iecache/records.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "iecache/errors.hpp"
#include "iecache/json_scan.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const Cell& RecordRow::at(const std::string& slot) const {
  static const Cell kNull{};
  auto it = values.find(slot);
  return it == values.end() ? kNull : it->second;
}

std::string canonical_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  // Plain notation of a double needs at most ~330 characters.
  char buf[400];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (res.ec != std::errc()) throw std::runtime_error("canonical_number: formatting failed");
  return std::string(buf, res.ptr);
}

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return canonical_number(v);
        } else if constexpr (std::is_same_v<T, DateTime>) {
          return v.value;
        } else {
          return v ? "true" : "false";
        }
      },
      cell);
}

ordered_json cell_to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, DateTime>) {
          return v.value;
        } else {
          return v;
        }
      },
      cell);
}

namespace {

std::optional<double> parse_number(std::string_view s) {
  s = text::trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  const std::string l = text::to_lower(text::trim(s));
  if (l == "true" || l == "yes") return true;
  if (l == "false" || l == "no") return false;
  return std::nullopt;
}

std::string json_as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

Cell coerce_cell(const json& value, ValueKind kind, bool* coerced) {
  if (coerced) *coerced = true;
  if (value.is_null()) return std::monostate{};
  auto fail = [&]() -> Cell {
    if (coerced) *coerced = false;
    return json_as_text(value);
  };
  switch (kind) {
    case ValueKind::text:
      if (value.is_boolean()) return std::string(value.get<bool>() ? "true" : "false");
      if (value.is_number()) return canonical_number(value.get<double>());
      return json_as_text(value);
    case ValueKind::number:
      if (value.is_number()) return value.get<double>();
      if (value.is_string()) {
        if (auto n = parse_number(value.get<std::string>())) return *n;
      }
      return fail();
    case ValueKind::boolean:
      if (value.is_boolean()) return value.get<bool>();
      if (value.is_string()) {
        if (auto b = parse_bool(value.get<std::string>())) return *b;
      }
      return fail();
    case ValueKind::datetime:
      if (value.is_string()) return DateTime{text::collapse_whitespace(value.get<std::string>())};
      if (value.is_number()) return DateTime{canonical_number(value.get<double>())};
      return fail();
  }
  return fail();
}

RecordRow row_from_json(const json& object, const ExtractionSchema& schema, Warnings& warnings) {
  RecordRow row;
  for (const auto& slot : schema.slots) row.values.emplace(slot.name, std::monostate{});
  std::set<std::string> assigned;
  for (const auto& [key, value] : object.items()) {
    auto name = normalize_slot_name(key);
    const SchemaSlot* slot = name ? schema.find(*name) : nullptr;
    if (!slot) {
      warnings.push_back("records: dropped undeclared field \"" + key + "\"");
      continue;
    }
    if (!assigned.insert(slot->name).second) {
      warnings.push_back("records: duplicate field \"" + key + "\" ignored");
      continue;
    }
    bool ok = true;
    row.values[slot->name] = coerce_cell(value, slot->kind, &ok);
    if (!ok) {
      warnings.push_back("records: could not read " + json_as_text(value) + " as " +
                         std::string(to_string(slot->kind)) + " for \"" + slot->name + "\", kept as text");
    }
  }
  return row;
}

void conform_row(RecordRow& row, const ExtractionSchema& schema) {
  for (const auto& slot : schema.slots) row.values.try_emplace(slot.name, std::monostate{});
}

ordered_json row_to_json(const RecordRow& row, const ExtractionSchema& schema) {
  ordered_json obj = ordered_json::object();
  for (const auto& slot : schema.slots) obj[slot.name] = cell_to_json(row.at(slot.name));
  return obj;
}

ordered_json rows_to_json(const std::vector<RecordRow>& rows, const ExtractionSchema& schema) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) arr.push_back(row_to_json(r, schema));
  return arr;
}

std::vector<RecordRow> parse_records_json(const json& array, const ExtractionSchema& schema, Warnings& warnings) {
  std::vector<RecordRow> rows;
  for (const auto& el : array) {
    if (!el.is_object()) {
      warnings.push_back("records: skipped non-object element");
      continue;
    }
    rows.push_back(row_from_json(el, schema, warnings));
  }
  return rows;
}

std::vector<RecordRow> parse_records(std::string_view text, const ExtractionSchema& schema, Warnings& warnings) {
  auto found = find_object_array(text);
  if (!found) throw RecordParseError("no JSON record array found");
  return parse_records_json(found->value, schema, warnings);
}

std::string normalize_row(const RecordRow& row, const ExtractionSchema& schema) {
  std::string key;
  for (const auto& slot : schema.slots) {
    const Cell& c = row.at(slot.name);
    key += slot.name;
    key += '=';
    if (std::holds_alternative<double>(c)) {
      key += canonical_number(std::get<double>(c));
    } else {
      key += text::to_lower(text::collapse_whitespace(cell_text(c)));
    }
    key += '\x1f';
  }
  return key;
}

std::vector<RecordRow> dedupe_rows(std::vector<RecordRow> rows, const ExtractionSchema& schema) {
  std::set<std::string> seen;
  std::vector<RecordRow> out;
  out.reserve(rows.size());
  for (auto& r : rows) {
    if (seen.insert(normalize_row(r, schema)).second) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace iecache
