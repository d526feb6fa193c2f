// SPDX-License-Identifier: Apache-2.0
#include "iecache/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>

#include "iecache/text.hpp"

namespace iecache {

using ordered_json = nlohmann::ordered_json;

namespace {

bool strippable(char c) {
  switch (c) {
    case '.':
    case ',':
    case ':':
    case ';':
    case '!':
    case '?':
    case '"':
    case '\'':
    case '`':
      return true;
    default:
      return false;
  }
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

RougeScore make_score(std::size_t overlap, std::size_t pred_count, std::size_t ref_count) {
  if (pred_count == 0 && ref_count == 0) return {1.0, 1.0, 1.0};
  if (pred_count == 0 || ref_count == 0) return {};
  RougeScore s;
  s.precision = static_cast<double>(overlap) / static_cast<double>(pred_count);
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref_count);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n,
                                                             std::size_t* total) {
  std::map<std::vector<std::string>, std::size_t> counts;
  *total = 0;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    ++*total;
  }
  return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <class ScoreOne>
RougeScore best_over_refs(const std::vector<std::string>& refs, ScoreOne score_one) {
  RougeScore best;
  bool first = true;
  for (const auto& ref : refs) {
    RougeScore s = score_one(ref);
    if (first || s.f1 > best.f1) best = s;
    first = false;
  }
  return best;
}

std::optional<double> mean(const std::vector<ItemScore>& items, std::optional<double> ItemScore::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& it : items) {
    if (it.*field) {
      sum += *(it.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string s = text::collapse_whitespace(text::to_lower(text));
  for (;;) {
    std::size_t b = 0, e = s.size();
    while (b < e && (strippable(s[b]) || text::is_space(s[b]))) ++b;
    while (e > b && (strippable(s[e - 1]) || text::is_space(s[e - 1]))) --e;
    if (b == 0 && e == s.size()) break;
    s = s.substr(b, e - b);
  }
  return s;
}

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

std::string light_stem(std::string_view token) {
  std::string t(token);
  if (t.size() > 4 && ends_with(t, "ies")) return t.substr(0, t.size() - 3) + "y";
  if (t.size() > 3 && ends_with(t, "s") && !ends_with(t, "ss")) t.pop_back();
  if (t.size() > 5 && ends_with(t, "ing")) return t.substr(0, t.size() - 3);
  if (t.size() > 4 && ends_with(t, "ed")) return t.substr(0, t.size() - 2);
  return t;
}

std::vector<std::string> rouge_tokens(std::string_view text, const RougeOptions& options) {
  auto tokens = text::split_whitespace(normalize_answer(text));
  if (options.stem) {
    for (auto& t : tokens) t = light_stem(t);
  }
  return tokens;
}

RougeScore rouge_n(std::string_view pred, const std::vector<std::string>& refs, std::size_t n,
                   const RougeOptions& options) {
  if (n == 0) n = 1;
  std::size_t pred_total = 0;
  const auto pred_counts = ngram_counts(rouge_tokens(pred, options), n, &pred_total);
  return best_over_refs(refs, [&](const std::string& ref) {
    std::size_t ref_total = 0;
    const auto ref_counts = ngram_counts(rouge_tokens(ref, options), n, &ref_total);
    std::size_t overlap = 0;
    for (const auto& [gram, c] : pred_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) overlap += std::min(c, it->second);
    }
    return make_score(overlap, pred_total, ref_total);
  });
}

RougeScore rouge_l(std::string_view pred, const std::vector<std::string>& refs, const RougeOptions& options) {
  const auto p = rouge_tokens(pred, options);
  return best_over_refs(refs, [&](const std::string& ref) {
    const auto r = rouge_tokens(ref, options);
    return make_score(lcs_length(p, r), p.size(), r.size());
  });
}

std::string linearize_records(const RecordSet& records) {
  std::string out;
  for (std::size_t i = 0; i < records.rows.size(); ++i) {
    if (i) out += '\n';
    const auto& row = records.rows[i];
    for (std::size_t k = 0; k < records.schema.slots.size(); ++k) {
      const auto& name = records.schema.slots[k].name;
      if (k) out += "; ";
      out += name + ": ";
      auto it = row.values.find(name);
      if (it != row.values.end()) out += cell_text(it->second);
    }
  }
  return out;
}

std::string linearize_gold(const GoldTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (i) out += '\n';
    for (std::size_t k = 0; k < table.slots.size(); ++k) {
      if (k) out += "; ";
      out += table.slots[k] + ": ";
      if (k < table.rows[i].size()) out += table.rows[i][k];
    }
  }
  return out;
}

ExtractionQuality extraction_quality(const RecordSet& records, const GoldTable& gold) {
  if (gold.rows.empty()) return {};
  if (records.rows.empty()) return {0.0, 0.0};
  const std::vector<std::string> refs{linearize_gold(gold)};
  const std::string pred = linearize_records(records);
  return {rouge_n(pred, refs, 1).f1, rouge_l(pred, refs).f1};
}

ItemScore score_item(const ScoreInput& input) {
  ItemScore s;
  s.task_id = input.task_id;
  s.error = input.error;
  if (input.prediction && !input.golds.empty()) {
    s.em = exact_match(*input.prediction, input.golds);
    s.rouge1_f = rouge_n(*input.prediction, input.golds, 1).f1;
    s.rougeL_f = rouge_l(*input.prediction, input.golds).f1;
  }
  if (input.records && input.gold_table) {
    auto q = extraction_quality(*input.records, *input.gold_table);
    s.extraction_rouge1_f = q.rouge1_f;
    s.extraction_rougeL_f = q.rougeL_f;
  }
  return s;
}

std::vector<ItemScore> score_items_serial(std::span<const ScoreInput> inputs) {
  std::vector<ItemScore> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(score_item(in));
  return out;
}

std::vector<ItemScore> score_items(std::span<const ScoreInput> inputs, int threads) {
  std::vector<ItemScore> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads > 0 ? threads : 1) if (threads != 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = score_item(inputs[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Aggregates aggregate(const std::vector<ItemScore>& items) {
  Aggregates a;
  a.em = mean(items, &ItemScore::em);
  a.rouge1_f = mean(items, &ItemScore::rouge1_f);
  a.rougeL_f = mean(items, &ItemScore::rougeL_f);
  a.extraction_rouge1_f = mean(items, &ItemScore::extraction_rouge1_f);
  a.extraction_rougeL_f = mean(items, &ItemScore::extraction_rougeL_f);
  return a;
}

MetricReport make_report(std::vector<ItemScore> items) {
  MetricReport r;
  r.n = items.size();
  r.aggregates = aggregate(items);
  r.per_item = std::move(items);
  return r;
}

ordered_json aggregates_to_json(const Aggregates& a) {
  ordered_json j = ordered_json::object();
  j["em"] = opt(a.em);
  j["rouge1_f"] = opt(a.rouge1_f);
  j["rougeL_f"] = opt(a.rougeL_f);
  j["extraction_rouge1_f"] = opt(a.extraction_rouge1_f);
  j["extraction_rougeL_f"] = opt(a.extraction_rougeL_f);
  return j;
}

ordered_json report_to_json(const MetricReport& report) {
  ordered_json items = ordered_json::array();
  for (const auto& it : report.per_item) {
    ordered_json j = ordered_json::object();
    j["task_id"] = it.task_id;
    j["em"] = opt(it.em);
    j["rouge1_f"] = opt(it.rouge1_f);
    j["rougeL_f"] = opt(it.rougeL_f);
    j["extraction_rouge1_f"] = opt(it.extraction_rouge1_f);
    j["extraction_rougeL_f"] = opt(it.extraction_rougeL_f);
    j["error"] = it.error ? ordered_json(*it.error) : ordered_json(nullptr);
    items.push_back(std::move(j));
  }
  ordered_json j = ordered_json::object();
  j["n"] = report.n;
  j["aggregates"] = aggregates_to_json(report.aggregates);
  j["per_item"] = std::move(items);
  return j;
}

std::string format_pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

std::string report_table(const MetricReport& report, const std::vector<std::string>& metrics) {
  struct Column {
    std::string key;
    std::string title;
    std::optional<double> ItemScore::*item;
    std::optional<double> Aggregates::*agg;
  };
  const std::vector<Column> all{
      {"em", "EM", &ItemScore::em, &Aggregates::em},
      {"rouge1", "ROUGE-1", &ItemScore::rouge1_f, &Aggregates::rouge1_f},
      {"rougeL", "ROUGE-L", &ItemScore::rougeL_f, &Aggregates::rougeL_f},
      {"x_rouge1", "X-ROUGE-1", &ItemScore::extraction_rouge1_f, &Aggregates::extraction_rouge1_f},
      {"x_rougeL", "X-ROUGE-L", &ItemScore::extraction_rougeL_f, &Aggregates::extraction_rougeL_f},
  };
  std::vector<Column> cols;
  for (const auto& c : all) {
    if (metrics.empty() || std::find(metrics.begin(), metrics.end(), c.key) != metrics.end()) cols.push_back(c);
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"task"};
  for (const auto& c : cols) header.push_back(c.title);
  grid.push_back(header);
  for (const auto& it : report.per_item) {
    std::vector<std::string> row{it.task_id};
    for (const auto& c : cols) row.push_back(format_pct(it.*(c.item)));
    grid.push_back(std::move(row));
  }
  std::vector<std::string> mean_row{"mean (n=" + std::to_string(report.n) + ")"};
  for (const auto& c : cols) mean_row.push_back(format_pct(report.aggregates.*(c.agg)));
  grid.push_back(std::move(mean_row));

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == 0) {
        line += row[k] + std::string(width[k] - row[k].size(), ' ');
      } else {
        line += "  " + std::string(width[k] - row[k].size(), ' ') + row[k];
      }
    }
    out += std::string(text::trim_right(line)) + "\n";
  };
  for (std::size_t r = 0; r < grid.size(); ++r) {
    if (r + 1 == grid.size()) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
    emit(grid[r]);
  }
  return out;
}

}  // namespace iecache
