// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace iecache {

struct Chunk {
  std::size_t index = 0;
  std::string text;
  std::size_t begin = 0;  // char span [begin, end) into the source
  std::size_t end = 0;
};

// Whitespace-token count scaled by a 1.3 safety factor, rounded up.
std::size_t approx_tokens(std::string_view text);

// Words that fit in `token_budget` approximate tokens (at least 1).
std::size_t words_for_budget(std::size_t token_budget);

// Splits `text` at word starts into chunks of at most `token_budget`
// approximate tokens, each overlapping the previous one by about
// `overlap_tokens`. Spans cover the text exactly: the first chunk starts at 0,
// the last ends at text.size(), and every chunk's trailing whitespace stays
// with it. Text without words yields a single chunk.
std::vector<Chunk> chunk_text(std::string_view text, std::size_t token_budget, std::size_t overlap_tokens);

// Inverse of chunk_text: concatenates chunks minus their overlaps.
std::string reassemble(const std::vector<Chunk>& chunks);

}  // namespace iecache
