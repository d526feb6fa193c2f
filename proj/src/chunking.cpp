// SPDX-License-Identifier: Apache-2.0
#include "iecache/chunking.hpp"

#include <algorithm>
#include <cmath>

#include "iecache/text.hpp"

namespace iecache {

namespace {

constexpr double kTokensPerWord = 1.3;

std::vector<std::size_t> word_starts(std::string_view text) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!text::is_space(text[i]) && (i == 0 || text::is_space(text[i - 1]))) starts.push_back(i);
  }
  return starts;
}

}  // namespace

std::size_t approx_tokens(std::string_view text) {
  const auto words = word_starts(text).size();
  return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * kTokensPerWord));
}

std::size_t words_for_budget(std::size_t token_budget) {
  const auto words = static_cast<std::size_t>(std::floor(static_cast<double>(token_budget) / kTokensPerWord));
  return std::max<std::size_t>(words, 1);
}

std::vector<Chunk> chunk_text(std::string_view text, std::size_t token_budget, std::size_t overlap_tokens) {
  const auto starts = word_starts(text);
  const std::size_t per_chunk = words_for_budget(token_budget);
  std::size_t overlap = static_cast<std::size_t>(std::floor(static_cast<double>(overlap_tokens) / kTokensPerWord));
  overlap = std::min(overlap, per_chunk - 1);

  std::vector<Chunk> chunks;
  if (starts.empty()) {
    chunks.push_back(Chunk{0, std::string(text), 0, text.size()});
    return chunks;
  }
  std::size_t first = 0;
  while (true) {
    const std::size_t last = std::min(first + per_chunk, starts.size());
    const std::size_t begin = first == 0 ? 0 : starts[first];
    const std::size_t end = last == starts.size() ? text.size() : starts[last];
    chunks.push_back(Chunk{chunks.size(), std::string(text.substr(begin, end - begin)), begin, end});
    if (last == starts.size()) break;
    first = last - overlap;
  }
  return chunks;
}

std::string reassemble(const std::vector<Chunk>& chunks) {
  std::string out;
  std::size_t covered = 0;
  for (const auto& c : chunks) {
    if (c.end <= covered) continue;
    const std::size_t skip = covered > c.begin ? covered - c.begin : 0;
    out.append(c.text, skip, std::string::npos);
    covered = c.end;
  }
  return out;
}

}  // namespace iecache
