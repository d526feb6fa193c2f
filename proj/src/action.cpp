// SPDX-License-Identifier: Apache-2.0
#include "iecache/action.hpp"

#include <charconv>
#include <vector>

#include "iecache/errors.hpp"
#include "iecache/text.hpp"

namespace iecache {

using ordered_json = nlohmann::ordered_json;

namespace {

struct Directive {
  std::string verb;
  std::size_t begin = 0;  // offset of the opening tag
  std::size_t end = 0;    // one past the closing tag
  std::string inner;
};

std::vector<Directive> find_directives(std::string_view text) {
  const std::string lower = text::to_lower(text);
  std::vector<Directive> found;
  for (const char* verb : {"seek", "final", "read"}) {
    const std::string open = std::string("<") + verb + ">";
    const std::string close = std::string("</") + verb + ">";
    std::size_t pos = 0;
    while ((pos = lower.find(open, pos)) != std::string::npos) {
      const std::size_t inner_begin = pos + open.size();
      const std::size_t close_pos = lower.find(close, inner_begin);
      if (close_pos == std::string::npos) break;
      found.push_back(Directive{verb, pos, close_pos + close.size(),
                                std::string(text::trim(text.substr(inner_begin, close_pos - inner_begin)))});
      pos = close_pos + close.size();
    }
  }
  return found;
}

}  // namespace

ParsedAction parse_action(std::string_view text, ActionGrammar grammar) {
  const auto directives = find_directives(text);
  if (directives.empty()) throw MalformedAction("no <seek>/<final> directive found");
  if (directives.size() > 1) {
    throw MalformedAction("expected exactly one directive, found " + std::to_string(directives.size()));
  }
  const Directive& d = directives.front();
  const bool allowed = d.verb == "final" || (grammar == ActionGrammar::cache_agent && d.verb == "seek") ||
                       (grammar == ActionGrammar::react && d.verb == "read");
  if (!allowed) throw MalformedAction("directive <" + d.verb + "> is not available here");
  if (d.inner.empty()) throw MalformedAction("directive <" + d.verb + "> is empty");

  ParsedAction out;
  std::string rest = std::string(text.substr(0, d.begin)) + std::string(text.substr(d.end));
  out.reasoning = std::string(text::trim(rest));
  if (d.verb == "final") {
    out.action = FinalAction{d.inner};
  } else if (d.verb == "seek") {
    out.action = SeekAction{d.inner};
  } else {
    std::size_t index = 0;
    auto res = std::from_chars(d.inner.data(), d.inner.data() + d.inner.size(), index);
    if (res.ec != std::errc() || res.ptr != d.inner.data() + d.inner.size()) {
      throw MalformedAction("<read> needs a window number, got \"" + d.inner + "\"");
    }
    out.action = ReadAction{index};
  }
  return out;
}

std::string render_action(const Action& action) {
  if (auto f = std::get_if<FinalAction>(&action)) return "<final>" + f->answer + "</final>";
  if (auto s = std::get_if<SeekAction>(&action)) return "<seek>" + s->focus + "</seek>";
  return "<read>" + std::to_string(std::get<ReadAction>(action).index) + "</read>";
}

ordered_json action_to_json(const Action& action) {
  ordered_json j = ordered_json::object();
  if (auto f = std::get_if<FinalAction>(&action)) {
    j["type"] = "final";
    j["answer"] = f->answer;
  } else if (auto s = std::get_if<SeekAction>(&action)) {
    j["type"] = "seek";
    j["focus"] = s->focus;
  } else {
    j["type"] = "read";
    j["index"] = std::get<ReadAction>(action).index;
  }
  return j;
}

Action action_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "final") return FinalAction{j.at("answer").get<std::string>()};
  if (type == "seek") return SeekAction{j.at("focus").get<std::string>()};
  if (type == "read") return ReadAction{j.at("index").get<std::size_t>()};
  throw Error("unknown action type: " + type);
}

std::string strip_final_tags(std::string_view text) {
  const std::string lower = text::to_lower(text);
  const auto open = lower.find("<final>");
  if (open != std::string::npos) {
    const auto close = lower.find("</final>", open + 7);
    if (close != std::string::npos) return std::string(text::trim(text.substr(open + 7, close - open - 7)));
  }
  return std::string(text::trim(text));
}

}  // namespace iecache
