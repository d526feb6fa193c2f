// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"

namespace iecache {

using json = nlohmann::json;

namespace {

constexpr std::chrono::milliseconds kMaxRetryDelay{8000};

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

HttpBackend::HttpBackend(ModelProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
  std::string endpoint = profile_.endpoint.empty() ? env_or_empty("IECACHE_API_BASE") : profile_.endpoint;
  if (endpoint.empty()) {
    throw TransportError("no endpoint configured (set endpoint or IECACHE_API_BASE)");
  }
  api_key_ = env_or_empty(profile_.auth_source.c_str());
  if (api_key_.empty()) {
    throw AuthMissing("API key not found in environment variable " + profile_.auth_source);
  }

  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw TransportError("endpoint must include a scheme: " + endpoint);
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

ChatResponse HttpBackend::send(const ChatRequest& request, const std::string&) {
  json body;
  body["model"] = request.profile.name;
  body["temperature"] = request.profile.temperature;
  body["max_tokens"] = request.profile.max_output_tokens;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  const std::string payload = body.dump();
  const std::string path = base_path_ + "/chat/completions";

  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) throw TransportError("unsupported endpoint: " + scheme_host_port_);
  client.set_connection_timeout(std::chrono::seconds(30));
  client.set_read_timeout(std::chrono::seconds(300));
  const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

  const int max_attempts = request.profile.retry_limit + 1;
  std::string last_error;
  last_attempts_ = 0;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = request.profile.retry_base_delay * (1LL << std::min(attempt - 1, 10));
      std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, kMaxRetryDelay));
    }
    ++last_attempts_;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (retryable_status(res->status)) continue;
      throw TransportError(last_error);
    }

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
      throw TransportError("malformed chat-completions reply: " + res->body.substr(0, 200));
    }
    const auto& message = reply["choices"][0].value("message", json::object());
    ChatResponse out;
    if (message.contains("content") && message["content"].is_string()) {
      out.content = message["content"].get<std::string>();
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
      out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", std::int64_t{0});
      out.usage.output_tokens = reply["usage"].value("completion_tokens", std::int64_t{0});
    }
    out.backend = name();
    return out;
  }
  throw TransportError("giving up after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

}  // namespace iecache
