// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace iecache {

struct FinalAction {
  std::string answer;
  bool operator==(const FinalAction&) const = default;
};

struct SeekAction {
  std::string focus;
  bool operator==(const SeekAction&) const = default;
};

// ReAct baseline only: read raw-text window `index`.
struct ReadAction {
  std::size_t index = 0;
  bool operator==(const ReadAction&) const = default;
};

using Action = std::variant<FinalAction, SeekAction, ReadAction>;

// Which directive verbs a caller accepts. Any other recognised directive in
// the text makes it malformed.
enum class ActionGrammar { cache_agent, react };

struct ParsedAction {
  Action action;
  std::string reasoning;  // the text with the directive removed, trimmed
};

// Exactly one of <seek>..</seek>, <final>..</final> (or <read>..</read> for
// the react grammar) must appear. Tags match case-insensitively and the inner
// text is trimmed. Throws MalformedAction otherwise.
ParsedAction parse_action(std::string_view text, ActionGrammar grammar = ActionGrammar::cache_agent);

std::string render_action(const Action& action);

nlohmann::ordered_json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

// If `text` holds a <final>..</final> block, returns its trimmed inner text;
// otherwise the trimmed text.
std::string strip_final_tags(std::string_view text);

}  // namespace iecache
