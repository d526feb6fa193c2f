// SPDX-License-Identifier: Apache-2.0
#include "iecache/json_scan.hpp"

#include <string>

namespace iecache {

using json = nlohmann::json;

namespace {

// Index one past the bracket that closes the one at `open`, honouring JSON
// string literals, or npos when unbalanced.
std::size_t matching_close(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

template <typename Accept>
std::optional<ScannedJson> scan(std::string_view text, std::size_t from, char opener, Accept accept) {
  for (std::size_t pos = text.find(opener, from); pos != std::string_view::npos;
       pos = text.find(opener, pos + 1)) {
    const std::size_t end = matching_close(text, pos);
    if (end == std::string_view::npos) continue;
    json value = json::parse(text.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded() || !accept(value)) continue;
    return ScannedJson{std::move(value), pos, end};
  }
  return std::nullopt;
}

}  // namespace

std::optional<ScannedJson> find_object_array(std::string_view text, std::size_t from) {
  return scan(text, from, '[', [](const json& v) {
    if (!v.is_array()) return false;
    for (const auto& el : v) {
      if (!el.is_object()) return false;
    }
    return true;
  });
}

std::optional<ScannedJson> find_object_with_key(std::string_view text, std::string_view key,
                                                std::size_t from) {
  return scan(text, from, '{', [&](const json& v) { return v.is_object() && v.contains(std::string(key)); });
}

}  // namespace iecache
