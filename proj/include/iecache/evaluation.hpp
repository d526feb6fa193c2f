// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iecache/datasets.hpp"
#include "iecache/records.hpp"

namespace iecache {

// Lowercase, trim, collapse internal whitespace, strip leading/trailing
// .,:;!? and quote characters. Idempotent.
std::string normalize_answer(std::string_view text);

// 1 iff normalize(pred) equals normalize(g) for some gold g.
int exact_match(std::string_view pred, const std::vector<std::string>& golds);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const RougeScore&) const = default;
};

struct RougeOptions {
  bool stem = false;  // light suffix stripping; off by default
};

// normalize_answer, then whitespace tokens (optionally stemmed).
std::vector<std::string> rouge_tokens(std::string_view text, const RougeOptions& options = {});

// Clipped n-gram overlap. Multi-reference: the reference with the best F1.
// Both sides empty scores 1; exactly one side empty scores 0.
RougeScore rouge_n(std::string_view pred, const std::vector<std::string>& refs, std::size_t n,
                   const RougeOptions& options = {});

// Token-level longest common subsequence, same conventions as rouge_n.
RougeScore rouge_l(std::string_view pred, const std::vector<std::string>& refs, const RougeOptions& options = {});

// Suffix stripper for the optional stemming mode.
std::string light_stem(std::string_view token);

// "slot: cell; slot: cell" per row, rows joined by newlines.
std::string linearize_records(const RecordSet& records);
std::string linearize_gold(const GoldTable& table);

struct ExtractionQuality {
  std::optional<double> rouge1_f;
  std::optional<double> rougeL_f;
};

// Scores extracted records against the gold table. Empty gold -> nulls;
// empty records against a nonempty gold -> zeros.
ExtractionQuality extraction_quality(const RecordSet& records, const GoldTable& gold);

struct ItemScore {
  std::string task_id;
  std::optional<double> em;
  std::optional<double> rouge1_f;
  std::optional<double> rougeL_f;
  std::optional<double> extraction_rouge1_f;
  std::optional<double> extraction_rougeL_f;
  std::optional<std::string> error;

  bool operator==(const ItemScore&) const = default;
};

struct ScoreInput {
  std::string task_id;
  std::optional<std::string> prediction;  // null when the run aborted
  std::vector<std::string> golds;
  const RecordSet* records = nullptr;     // optional
  const GoldTable* gold_table = nullptr;  // optional
  std::optional<std::string> error;
};

ItemScore score_item(const ScoreInput& input);

// Scores every item. The OpenMP kernel and the serial reference must agree
// exactly; the serial one exists for tests and benchmarks.
std::vector<ItemScore> score_items(std::span<const ScoreInput> inputs, int threads = 0);
std::vector<ItemScore> score_items_serial(std::span<const ScoreInput> inputs);

struct Aggregates {
  std::optional<double> em;
  std::optional<double> rouge1_f;
  std::optional<double> rougeL_f;
  std::optional<double> extraction_rouge1_f;
  std::optional<double> extraction_rougeL_f;

  bool operator==(const Aggregates&) const = default;
};

struct MetricReport {
  std::vector<ItemScore> per_item;
  Aggregates aggregates;  // means over non-null values, in [0,1]
  std::size_t n = 0;
};

MetricReport make_report(std::vector<ItemScore> items);
Aggregates aggregate(const std::vector<ItemScore>& items);

nlohmann::ordered_json report_to_json(const MetricReport& report);
nlohmann::ordered_json aggregates_to_json(const Aggregates& a);

// 2-decimal percentage ("71.77"), or "-" for null.
std::string format_pct(const std::optional<double>& v);

// Aligned plain-text table; `metrics` selects columns among em, rouge1,
// rougeL, x_rouge1, x_rougeL (empty = all).
std::string report_table(const MetricReport& report, const std::vector<std::string>& metrics = {});

}  // namespace iecache
