// SPDX-License-Identifier: Apache-2.0
#include "iecache/gateway.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "iecache/errors.hpp"
#include "iecache/hashing.hpp"
#include "iecache/text.hpp"

namespace iecache {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error("unknown message role: " + std::string(s));
}

void ModelProfile::validate() const {
  if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
  if (retry_limit < 0) throw ConfigError("retry_limit must be nonnegative");
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error("chat request has no messages");
  if (messages.front().role == Role::assistant) {
    throw Error("first chat message must have role system or user");
  }
  profile.validate();
}

std::string fingerprint(const std::vector<Message>& messages) {
  std::string canonical;
  for (const auto& m : messages) {
    canonical += to_string(m.role);
    canonical += '\n';
    canonical += m.content;
    canonical += '\n';
  }
  return sha256_hex(canonical);
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(Mode mode, std::vector<Entry> entries) : mode_(mode) {
  std::size_t line = 2;
  for (auto& e : entries) add(std::move(e), line++);
}

void ScriptedBackend::add(Entry entry, std::size_t line) {
  if (mode_ == Mode::map && entry.fingerprint) {
    auto [it, inserted] = keyed_.emplace(*entry.fingerprint, entry);
    if (!inserted) {
      throw FixtureParseError(line, 0, "duplicate fingerprint " + *entry.fingerprint);
    }
    return;
  }
  queue_.push_back(std::move(entry));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("fixture not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_fixture_text(buf.str());
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_fixture_text(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  std::shared_ptr<ScriptedBackend> backend;

  auto parse_line = [&](const std::string& l) {
    try {
      return json::parse(l);
    } catch (const json::parse_error& e) {
      throw FixtureParseError(line_no, e.byte, "malformed JSON");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj = parse_line(line);
    if (!obj.is_object()) throw FixtureParseError(line_no, 0, "expected a JSON object");

    if (!backend) {
      if (!obj.contains("mode") || !obj["mode"].is_string()) {
        throw FixtureParseError(line_no, 0, "first line must be a header with a \"mode\"");
      }
      const auto mode = obj["mode"].get<std::string>();
      if (mode == "queue") {
        backend = std::make_shared<ScriptedBackend>(Mode::queue);
      } else if (mode == "map") {
        backend = std::make_shared<ScriptedBackend>(Mode::map);
      } else {
        throw FixtureParseError(line_no, 0, "unknown mode \"" + mode + "\"");
      }
      continue;
    }

    Entry entry;
    if (!obj.contains("content") || !obj["content"].is_string()) {
      throw FixtureParseError(line_no, 0, "entry needs a string \"content\"");
    }
    entry.content = obj["content"].get<std::string>();
    if (obj.contains("fingerprint")) {
      if (!obj["fingerprint"].is_string()) {
        throw FixtureParseError(line_no, 0, "\"fingerprint\" must be a hex string");
      }
      entry.fingerprint = obj["fingerprint"].get<std::string>();
    }
    for (const char* key : {"prompt_tokens", "output_tokens"}) {
      if (!obj.contains(key)) continue;
      if (!obj[key].is_number_integer() || obj[key].get<std::int64_t>() < 0) {
        throw FixtureParseError(line_no, 0, std::string("\"") + key + "\" must be a nonnegative integer");
      }
    }
    entry.usage.prompt_tokens = obj.value("prompt_tokens", std::int64_t{0});
    entry.usage.output_tokens = obj.value("output_tokens", std::int64_t{0});
    backend->add(std::move(entry), line_no);
  }
  if (!backend) throw FixtureParseError(line_no == 0 ? 1 : line_no, 0, "missing header line");
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_contents(std::vector<std::string> contents) {
  auto backend = std::make_shared<ScriptedBackend>(Mode::queue);
  for (auto& c : contents) backend->push(std::move(c));
  return backend;
}

void ScriptedBackend::push(std::string content, Usage usage) {
  std::lock_guard lock(mu_);
  queue_.push_back(Entry{std::nullopt, std::move(content), usage});
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

ChatResponse ScriptedBackend::send(const ChatRequest&, const std::string& fp) {
  std::lock_guard lock(mu_);
  if (mode_ == Mode::map) {
    if (auto it = keyed_.find(fp); it != keyed_.end()) {
      return ChatResponse{it->second.content, it->second.usage, name()};
    }
  }
  if (queue_.empty()) throw FixtureExhausted();
  Entry e = std::move(queue_.front());
  queue_.pop_front();
  return ChatResponse{std::move(e.content), e.usage, name()};
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ModelBackend> backend, ModelProfile profile)
    : backend_(std::move(backend)), profile_(std::move(profile)) {
  if (!backend_) throw Error("gateway needs a backend");
  profile_.validate();
}

ChatResponse Gateway::complete(std::vector<Message> messages) {
  return complete(ChatRequest{std::move(messages), profile_});
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  request.validate();
  const std::string fp = fingerprint(request.messages);
  ChatResponse response = backend_->send(request, fp);
  response.content = std::string(text::trim_right(response.content));

  std::lock_guard lock(mu_);
  if (recording_) {
    transcript_.push_back(TranscriptRecord{fp, request, response, transcript_.size()});
  }
  ++calls_;
  return response;
}

void Gateway::set_recording(bool on) {
  std::lock_guard lock(mu_);
  recording_ = on;
}

std::vector<TranscriptRecord> Gateway::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::size_t Gateway::call_count() const {
  std::lock_guard lock(mu_);
  return calls_;
}

void Gateway::write_fixture(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write fixture: " + path.string());
  out << json{{"mode", "queue"}}.dump() << '\n';
  for (const auto& rec : transcript()) {
    json line = json::object();
    line["fingerprint"] = rec.request_fingerprint;
    line["content"] = rec.response.content;
    line["prompt_tokens"] = rec.response.usage.prompt_tokens;
    line["output_tokens"] = rec.response.usage.output_tokens;
    out << line.dump() << '\n';
  }
}

}  // namespace iecache
