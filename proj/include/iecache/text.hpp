// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace iecache::text {

// ASCII-only; non-ASCII bytes pass through untouched.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

// Trims and replaces every internal whitespace run with a single space.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

// First `max_chars` UTF-8 code points of `s`.
std::string utf8_prefix(std::string_view s, std::size_t max_chars);

bool is_space(char c);

}  // namespace iecache::text
