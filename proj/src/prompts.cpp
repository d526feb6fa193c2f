// SPDX-License-Identifier: Apache-2.0
#include "iecache/prompts.hpp"

#include <fstream>
#include <sstream>

#include "iecache/errors.hpp"

namespace iecache {

namespace {

PromptSet make_defaults() {
  PromptSet p;
  p.system = "You are a careful assistant that reads long documents and reasons over structured notes.";

  p.schema_induction =
      "Design an extraction schema for answering the question below. The schema lists the "
      "fields (table columns) that should be pulled out of a long document so the question "
      "can be answered from the extracted records alone.\n\n"
      "QUESTION: {{query}}\n\n"
      "Reply with a JSON array only. Each element is an object with keys \"name\" "
      "(snake_case identifier), \"description\" (one short sentence) and \"kind\" "
      "(one of text, number, datetime, boolean). Use at most {{max_slots}} fields.";

  p.extraction =
      "Extract records from the document excerpt below using the given schema. Only extract "
      "information relevant to the question.\n\n"
      "QUESTION: {{query}}\n"
      "{{focus_line}}"
      "SCHEMA:\n{{schema}}\n\n"
      "EXCERPT:\n{{chunk}}\n\n"
      "Reply with a JSON array of objects whose keys are schema field names. Use null for "
      "unknown values. Reply [] if the excerpt contains nothing relevant.";

  p.extraction_focus_slots =
      "\nIf the focus needs information the schema cannot hold, you may instead reply with a "
      "JSON object {\"new_slots\": [...], \"rows\": [...]} declaring at most 2 additional "
      "fields in the schema format.";

  p.monolithic =
      "Read the document and extract the information needed to answer the question. Decide "
      "yourself which fields to extract.\n\n"
      "QUESTION: {{query}}\n\n"
      "DOCUMENT:\n{{text}}\n\n"
      "Reply with two JSON arrays in this order: first the fields, as objects with keys "
      "\"name\", \"description\" and \"kind\" (text, number, datetime, boolean); then the "
      "records, as objects keyed by field name.";

  p.update =
      "You maintain a compact cache of records for answering a question. Merge the new "
      "records into the current cache: combine compatible information into existing "
      "records, remove redundant or off-target records, and prune low-utility details so "
      "the cache stays compact.\n\n"
      "QUESTION: {{query}}\n"
      "SCHEMA:\n{{schema}}\n\n"
      "CURRENT CACHE:\n{{cache}}\n\n"
      "NEW RECORDS:\n{{new_records}}\n\n"
      "Reply with the full updated cache as a JSON array of objects keyed by field name.";

  p.self_check =
      "Check the cached records against the reasoning below. Correct wrong records, add "
      "missing ones the reasoning relies on, and drop records that are irrelevant.\n\n"
      "QUESTION: {{query}}\n"
      "SCHEMA:\n{{schema}}\n\n"
      "CACHE:\n{{cache}}\n\n"
      "REASONING:\n{{reasoning}}\n\n"
      "Reply with the revised cache as a JSON array of objects keyed by field name.";

  p.reason =
      "Answer the question using the cached records below. The full document is not shown; "
      "if the records are insufficient you can request more information.\n\n"
      "QUESTION: {{query}}\n"
      "{{family_instruction}}\n\n"
      "CACHE:\n{{cache}}\n\n"
      "Think briefly, then end your reply with exactly one directive:\n"
      "<final>your answer</final> when the cache is sufficient, or\n"
      "<seek>what information is missing</seek> to extract more from the document.";

  p.fallback =
      "Answer the question directly from the cached records.\n\n"
      "QUESTION: {{query}}\n"
      "{{family_instruction}}\n\n"
      "CACHE:\n{{cache}}\n\n"
      "Reply with the answer only.";

  p.repair =
      "Your previous reply could not be used: {{error}}\n"
      "Reply again and follow the required format exactly: {{format}}";

  p.generic =
      "Read the document and answer the question.\n"
      "{{family_instruction}}\n\n"
      "DOCUMENT:\n{{text}}\n\n"
      "QUESTION: {{query}}\n\n"
      "Reply with the answer only.";

  p.cot =
      "Read the document and answer the question.\n"
      "{{family_instruction}}\n\n"
      "DOCUMENT:\n{{text}}\n\n"
      "QUESTION: {{query}}\n\n"
      "Let's think step by step. Finish with a final line of the form \"Answer: <answer>\".";

  p.react =
      "Answer the question about a document that is split into {{window_count}} windows "
      "numbered 0 to {{last_window}}. Read windows as needed.\n\n"
      "QUESTION: {{query}}\n"
      "{{family_instruction}}\n\n"
      "SCRATCHPAD:\n{{scratchpad}}\n\n"
      "Think briefly, then end your reply with exactly one directive:\n"
      "<read>window number</read> to read a window, or\n"
      "<final>your answer</final> when you can answer.";

  p.react_fallback =
      "Answer the question directly from the scratchpad.\n\n"
      "QUESTION: {{query}}\n"
      "{{family_instruction}}\n\n"
      "SCRATCHPAD:\n{{scratchpad}}\n\n"
      "Reply with the answer only.";

  p.family_qa = "Give only the final answer, as short as possible.";
  p.family_planning =
      "Give the proposed meeting time in the form \"Day, HH:MM - HH:MM\".";
  p.family_summarization = "Write a concise summary that answers the query.";
  return p;
}

}  // namespace

const PromptSet& PromptSet::defaults() {
  static const PromptSet set = make_defaults();
  return set;
}

PromptSet PromptSet::load_overrides(const std::filesystem::path& dir) {
  PromptSet p = defaults();
  const std::pair<const char*, std::string PromptSet::*> fields[] = {
      {"system", &PromptSet::system},
      {"schema_induction", &PromptSet::schema_induction},
      {"extraction", &PromptSet::extraction},
      {"extraction_focus_slots", &PromptSet::extraction_focus_slots},
      {"monolithic", &PromptSet::monolithic},
      {"update", &PromptSet::update},
      {"self_check", &PromptSet::self_check},
      {"reason", &PromptSet::reason},
      {"fallback", &PromptSet::fallback},
      {"repair", &PromptSet::repair},
      {"generic", &PromptSet::generic},
      {"cot", &PromptSet::cot},
      {"react", &PromptSet::react},
      {"react_fallback", &PromptSet::react_fallback},
      {"family_qa", &PromptSet::family_qa},
      {"family_planning", &PromptSet::family_planning},
      {"family_summarization", &PromptSet::family_summarization},
  };
  if (!std::filesystem::is_directory(dir)) throw NotFound("prompt directory not found: " + dir.string());
  for (const auto& [name, member] : fields) {
    std::ifstream in(dir / (std::string(name) + ".txt"), std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    p.*member = buf.str();
  }
  return p;
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    const auto open = tpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(i));
      break;
    }
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tpl.substr(i));
      break;
    }
    out.append(tpl.substr(i, open - i));
    const std::string key(tpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw ConfigError("prompt template uses unknown placeholder {{" + key + "}}");
    out.append(it->second);
    i = close + 2;
  }
  return out;
}

}  // namespace iecache
