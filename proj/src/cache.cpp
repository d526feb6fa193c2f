// SPDX-License-Identifier: Apache-2.0
#include "iecache/cache.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/hashing.hpp"
#include "iecache/prompts.hpp"
#include "iecache/repair.hpp"

namespace iecache {

std::string_view to_string(ProvenanceKind kind) {
  switch (kind) {
    case ProvenanceKind::init:
      return "init";
    case ProvenanceKind::seek:
      return "seek";
    case ProvenanceKind::check:
      return "check";
  }
  return "init";
}

Cache::Cache(ExtractionSchema schema, std::vector<CacheEntry> entries, std::size_t capacity)
    : schema_(std::move(schema)), capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("cache capacity must be positive");

  std::set<std::string> seen;
  for (auto& e : entries) {
    conform_row(e.row, schema_);
    if (seen.insert(normalize_row(e.row, schema_)).second) entries_.push_back(std::move(e));
  }

  if (entries_.size() > capacity_) {
    evicted_ = entries_.size() - capacity_;
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entries_[a].added_step < entries_[b].added_step; });
    std::vector<bool> drop(entries_.size(), false);
    for (std::size_t i = 0; i < evicted_; ++i) drop[order[i]] = true;
    std::vector<CacheEntry> kept;
    kept.reserve(capacity_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(entries_[i]));
    }
    entries_ = std::move(kept);
  }
  digest_ = sha256_hex(render_cache(*this));
}

std::string Cache::entries_json() const {
  std::vector<RecordRow> rows;
  rows.reserve(entries_.size());
  for (const auto& e : entries_) rows.push_back(e.row);
  return rows_to_json(rows, schema_).dump();
}

namespace {

std::string escape_cell(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string render_rows(const ExtractionSchema& schema, const std::vector<const RecordRow*>& rows) {
  std::string out;
  for (std::size_t i = 0; i < schema.slots.size(); ++i) {
    if (i) out += '|';
    out += schema.slots[i].name;
  }
  for (const RecordRow* row : rows) {
    out += '\n';
    for (std::size_t i = 0; i < schema.slots.size(); ++i) {
      if (i) out += '|';
      out += escape_cell(cell_text(row->at(schema.slots[i].name)));
    }
  }
  return out;
}

// Applies the enforcement pipeline to a model-proposed entry list.
Cache enforce(const Cache& old, const ExtractionSchema& schema, std::vector<RecordRow> proposed,
              Provenance fresh) {
  std::map<std::string, const CacheEntry*> existing;
  for (const auto& e : old.entries()) {
    RecordRow conformed = e.row;
    conform_row(conformed, schema);
    existing.emplace(normalize_row(conformed, schema), &e);
  }
  std::vector<CacheEntry> entries;
  entries.reserve(proposed.size());
  for (auto& row : dedupe_rows(std::move(proposed), schema)) {
    if (auto it = existing.find(normalize_row(row, schema)); it != existing.end()) {
      entries.push_back(*it->second);
    } else {
      entries.push_back(CacheEntry{std::move(row), fresh, fresh.step});
    }
  }
  return Cache(schema, std::move(entries), old.capacity());
}

ExtractionSchema merged_schema(const ExtractionSchema& cache_schema, const ExtractionSchema& schema) {
  ExtractionSchema merged = schema;
  for (const auto& s : cache_schema.slots) {
    if (!merged.has(s.name)) merged.slots.push_back(s);
  }
  if (merged.slots.size() != schema.slots.size()) merged.origin = SchemaOrigin::focus_extended;
  return merged;
}

}  // namespace

std::string render_table(const ExtractionSchema& schema, const std::vector<RecordRow>& rows) {
  std::vector<const RecordRow*> ptrs;
  ptrs.reserve(rows.size());
  for (const auto& r : rows) ptrs.push_back(&r);
  return render_rows(schema, ptrs);
}

std::string render_cache(const Cache& cache) {
  std::vector<const RecordRow*> ptrs;
  ptrs.reserve(cache.size());
  for (const auto& e : cache.entries()) ptrs.push_back(&e.row);
  return render_rows(cache.schema(), ptrs);
}

Cache init_cache(std::string_view, const RecordSet& extraction, std::size_t capacity, Warnings* warnings) {
  auto rows = dedupe_rows(extraction.rows, extraction.schema);
  if (rows.size() > capacity) {
    if (warnings) {
      warnings->push_back("cache: truncated " + std::to_string(rows.size()) + " initial rows to capacity " +
                          std::to_string(capacity));
    }
    rows.resize(capacity);
  }
  std::vector<CacheEntry> entries;
  entries.reserve(rows.size());
  for (auto& r : rows) entries.push_back(CacheEntry{std::move(r), Provenance{ProvenanceKind::init, 0}, 0});
  return Cache(extraction.schema, std::move(entries), capacity);
}

Cache merge_mechanically(const Cache& cache, const RecordSet& new_records, const ExtractionSchema& schema,
                         std::size_t step) {
  const ExtractionSchema target = merged_schema(cache.schema(), schema);
  std::vector<CacheEntry> entries = cache.entries();
  for (const auto& row : new_records.rows) {
    entries.push_back(CacheEntry{row, Provenance{ProvenanceKind::seek, step}, step});
  }
  return Cache(target, std::move(entries), cache.capacity());
}

CacheOpResult update_cache(std::string_view query, const ExtractionSchema& schema, const Cache& cache,
                           const RecordSet& new_records, std::size_t step, Gateway& model,
                           const PromptSet& prompts, std::size_t repair_retries) {
  const ExtractionSchema target = merged_schema(cache.schema(), merged_schema(schema, new_records.schema));
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.update, {{"query", std::string(query)},
                                                    {"schema", render_schema(target)},
                                                    {"cache", cache.entries_json()},
                                                    {"new_records", rows_to_json(new_records.rows, target).dump()}})}};

  Warnings parse_warnings;
  auto outcome = call_with_repair<std::vector<RecordRow>>(
      model, std::move(messages),
      [&](const std::string& out) {
        parse_warnings.clear();
        return parse_records(out, target, parse_warnings);
      },
      repair_retries, prompts, "a JSON array of objects keyed by schema field name");

  Warnings warnings = std::move(outcome.warnings);
  if (!outcome.value) {
    warnings.push_back("cache: update reply unparseable, fell back to mechanical merge");
    Cache merged = merge_mechanically(cache, new_records, target, step);
    return CacheOpResult{std::move(merged), std::move(outcome.last_output), outcome.model_calls,
                         std::move(warnings)};
  }
  warnings.insert(warnings.end(), parse_warnings.begin(), parse_warnings.end());
  Cache next = enforce(cache, target, std::move(*outcome.value), Provenance{ProvenanceKind::seek, step});
  if (next.evicted() > 0) {
    warnings.push_back("cache: evicted " + std::to_string(next.evicted()) + " oldest entries over capacity");
  }
  return CacheOpResult{std::move(next), std::move(outcome.last_output), outcome.model_calls, std::move(warnings)};
}

CacheOpResult self_check(std::string_view query, const ExtractionSchema& schema, const Cache& cache,
                         std::string_view reasoning, std::size_t step, Gateway& model, const PromptSet& prompts) {
  const ExtractionSchema target = merged_schema(cache.schema(), schema);
  std::vector<Message> messages{
      {Role::system, prompts.system},
      {Role::user, render_template(prompts.self_check, {{"query", std::string(query)},
                                                        {"schema", render_schema(target)},
                                                        {"cache", cache.entries_json()},
                                                        {"reasoning", std::string(reasoning)}})}};
  ChatResponse reply = model.complete(std::move(messages));
  Warnings warnings;
  try {
    auto rows = parse_records(reply.content, target, warnings);
    Cache next = enforce(cache, target, std::move(rows), Provenance{ProvenanceKind::check, step});
    if (next.evicted() > 0) {
      warnings.push_back("cache: evicted " + std::to_string(next.evicted()) + " oldest entries over capacity");
    }
    return CacheOpResult{std::move(next), std::move(reply.content), 1, std::move(warnings)};
  } catch (const RecordParseError& e) {
    warnings.push_back(std::string("cache: self-check reply unparseable, cache unchanged: ") + e.what());
    return CacheOpResult{cache, std::move(reply.content), 1, std::move(warnings)};
  }
}

}  // namespace iecache
