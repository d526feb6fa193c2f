// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "iecache/records.hpp"
#include "iecache/schema.hpp"

namespace iecache {

class Gateway;
struct PromptSet;

enum class ProvenanceKind { init, seek, check };

std::string_view to_string(ProvenanceKind kind);

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::init;
  std::size_t step = 0;

  bool operator==(const Provenance&) const = default;
};

struct CacheEntry {
  RecordRow row;
  Provenance provenance;
  std::size_t added_step = 0;  // equals provenance.step

  bool operator==(const CacheEntry&) const = default;
};

inline constexpr std::size_t kDefaultCacheCapacity = 50;

// The agent's read-write working memory. Every mutation goes through the
// constructor, which enforces the invariants:
//   * no two entries share a normalize_row key (first occurrence wins),
//   * size <= capacity (the entries with the lowest added_step are evicted,
//     earlier entries first among ties),
//   * digest == sha256(render_cache(*this)).
class Cache {
 public:
  Cache(ExtractionSchema schema, std::vector<CacheEntry> entries, std::size_t capacity = kDefaultCacheCapacity);

  const ExtractionSchema& schema() const { return schema_; }
  const std::vector<CacheEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const std::string& digest() const { return digest_; }

  // Rows evicted by the capacity rule when this cache was built.
  std::size_t evicted() const { return evicted_; }

  // Entries as a JSON array keyed by slot name, for prompts.
  std::string entries_json() const;

 private:
  ExtractionSchema schema_;
  std::vector<CacheEntry> entries_;
  std::size_t capacity_;
  std::string digest_;
  std::size_t evicted_ = 0;
};

// Pipe-delimited table: a header of slot names, then one line per entry.
// Nulls render empty; '|' and newlines inside cells become \| and \n.
// Lines are joined with '\n' and there is no trailing newline.
std::string render_cache(const Cache& cache);
std::string render_table(const ExtractionSchema& schema, const std::vector<RecordRow>& rows);

struct CacheOpResult {
  Cache cache;
  std::string model_output;
  std::size_t model_calls = 0;
  Warnings warnings;
};

// Deduplicated rows of E with provenance init. Overflow keeps the first
// `capacity` rows in extraction order.
Cache init_cache(std::string_view query, const RecordSet& extraction, std::size_t capacity = kDefaultCacheCapacity,
                 Warnings* warnings = nullptr);

// Single merge/prune call; the reply is re-enforced mechanically. Returned
// rows matching an existing key keep the existing entry, others are tagged
// seek(step). An unparseable reply (after repairs) falls back to a mechanical
// merge of old entries and new rows.
CacheOpResult update_cache(std::string_view query, const ExtractionSchema& schema, const Cache& cache,
                           const RecordSet& new_records, std::size_t step, Gateway& model,
                           const PromptSet& prompts, std::size_t repair_retries);

// Mechanical merge used as the update fallback.
Cache merge_mechanically(const Cache& cache, const RecordSet& new_records, const ExtractionSchema& schema,
                         std::size_t step);

// Optional revision of the cache against a reasoning trace. A single call;
// an unparseable reply leaves the cache unchanged.
CacheOpResult self_check(std::string_view query, const ExtractionSchema& schema, const Cache& cache,
                         std::string_view reasoning, std::size_t step, Gateway& model, const PromptSet& prompts);

}  // namespace iecache
