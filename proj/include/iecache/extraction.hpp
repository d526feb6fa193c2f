// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "iecache/records.hpp"
#include "iecache/schema.hpp"

namespace iecache {

class Gateway;
struct PromptSet;

struct ExtractionOptions {
  std::size_t chunk_token_budget = 3000;
  std::size_t chunk_overlap_tokens = 200;
  std::size_t max_rows = kDefaultMaxRowsPerExtraction;
  std::size_t repair_retries = 2;
  std::size_t parallel_width = 1;  // concurrent chunk calls
  bool allow_focus_slots = false;
  std::size_t max_focus_slots = 2;
  std::size_t max_slots = kDefaultMaxSlots;
};

struct ExtractionResult {
  RecordSet records;
  std::string model_output;  // per-chunk outputs joined in chunk order
  std::size_t model_calls = 0;
  Warnings warnings;
};

// Schema-guided extraction over every chunk of `text`. With a focus the
// prompt gains a "FOCUS: ..." line. Chunks whose output stays unparseable
// after repairs contribute no rows. Gateway errors propagate.
ExtractionResult extract(std::string_view query, const ExtractionSchema& schema, std::string_view text,
                         const std::optional<std::string>& focus, Gateway& model, const PromptSet& prompts,
                         const ExtractionOptions& options = {});

// Single call that both chooses the slots and extracts rows. The returned
// schema has origin=induced. Throws SchemaParseError when no slot array can
// be recovered even after repairs.
ExtractionResult extract_monolithic(std::string_view query, std::string_view text, Gateway& model,
                                    const PromptSet& prompts, const ExtractionOptions& options = {});

}  // namespace iecache
