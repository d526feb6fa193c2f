// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include <json.hpp>

namespace iecache {

struct ScannedJson {
  nlohmann::json value;
  std::size_t begin = 0;  // offset of the opening bracket
  std::size_t end = 0;    // one past the closing bracket
};

// Finds the first well-formed JSON array in free text whose elements are all
// objects (an empty array qualifies). Scanning starts at `from`.
std::optional<ScannedJson> find_object_array(std::string_view text, std::size_t from = 0);

// Finds the first well-formed JSON object in free text that has `key`.
std::optional<ScannedJson> find_object_with_key(std::string_view text, std::string_view key,
                                                std::size_t from = 0);

}  // namespace iecache
