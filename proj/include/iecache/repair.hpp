// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/prompts.hpp"

namespace iecache {

template <typename T>
struct RepairOutcome {
  std::optional<T> value;   // empty when every attempt failed to parse
  std::string last_output;
  std::string last_error;
  std::size_t model_calls = 0;
  std::vector<std::string> warnings;
};

// Sends `messages`, parses the reply with `parse` (which throws an
// iecache::Error on malformed output) and re-prompts at most `retries` times,
// each time quoting the malformed reply back to the model. Gateway errors
// propagate.
template <typename T, typename Parse>
RepairOutcome<T> call_with_repair(Gateway& model, std::vector<Message> messages, Parse&& parse,
                                  std::size_t retries, const PromptSet& prompts,
                                  std::string_view format_hint) {
  RepairOutcome<T> out;
  for (std::size_t attempt = 0; attempt <= retries; ++attempt) {
    ChatResponse reply = model.complete(messages);
    ++out.model_calls;
    out.last_output = reply.content;
    try {
      out.value.emplace(parse(out.last_output));
      return out;
    } catch (const GatewayError&) {
      throw;
    } catch (const Error& e) {
      out.last_error = e.what();
      out.warnings.push_back("unparseable model output (attempt " + std::to_string(attempt + 1) +
                             "): " + e.what());
    }
    if (attempt == retries) break;
    messages.push_back(Message{Role::assistant, out.last_output});
    messages.push_back(Message{Role::user, render_template(prompts.repair, {{"error", out.last_error},
                                                                           {"format", std::string(format_hint)}})});
  }
  return out;
}

}  // namespace iecache
