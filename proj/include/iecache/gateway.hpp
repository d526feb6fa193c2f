// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iecache {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct Message {
  Role role;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct ModelProfile {
  std::string name = "default";
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string endpoint;                      // live backend only
  std::string auth_source = "IECACHE_API_KEY";  // env var holding the key
  int retry_limit = 2;
  std::chrono::milliseconds retry_base_delay{500};

  void validate() const;
};

struct ChatRequest {
  std::vector<Message> messages;
  ModelProfile profile;

  void validate() const;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t output_tokens = 0;

  bool operator==(const Usage&) const = default;
};

struct ChatResponse {
  std::string content;
  Usage usage;
  std::string backend;

  bool operator==(const ChatResponse&) const = default;
};

struct TranscriptRecord {
  std::string request_fingerprint;
  ChatRequest request;
  ChatResponse response;
  std::size_t sequence_index = 0;
};

// SHA-256 over "role\ncontent\n" for each message, concatenated.
std::string fingerprint(const std::vector<Message>& messages);

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual ChatResponse send(const ChatRequest& request, const std::string& fingerprint) = 0;
  virtual std::string name() const = 0;
};

// Serves canned responses from a fixture. Queue mode pops entries in order;
// map mode answers by request fingerprint and falls back to the queue of
// unkeyed entries.
class ScriptedBackend : public ModelBackend {
 public:
  enum class Mode { queue, map };

  struct Entry {
    std::optional<std::string> fingerprint;
    std::string content;
    Usage usage;
  };

  explicit ScriptedBackend(Mode mode = Mode::queue) : mode_(mode) {}
  ScriptedBackend(Mode mode, std::vector<Entry> entries);

  static std::shared_ptr<ScriptedBackend> from_fixture(const std::filesystem::path& path);
  static std::shared_ptr<ScriptedBackend> from_fixture_text(std::string_view jsonl);
  static std::shared_ptr<ScriptedBackend> from_contents(std::vector<std::string> contents);

  void push(std::string content, Usage usage = {});
  std::size_t remaining() const;
  Mode mode() const { return mode_; }

  ChatResponse send(const ChatRequest& request, const std::string& fingerprint) override;
  std::string name() const override { return "scripted"; }

 private:
  void add(Entry entry, std::size_t line);

  Mode mode_;
  mutable std::mutex mu_;
  std::deque<Entry> queue_;
  std::map<std::string, Entry> keyed_;
};

// OpenAI-compatible chat-completions client.
class HttpBackend : public ModelBackend {
 public:
  // Resolves endpoint (profile, else IECACHE_API_BASE) and key (env var named
  // by profile.auth_source). Throws AuthMissing / TransportError when absent.
  explicit HttpBackend(ModelProfile profile);

  ChatResponse send(const ChatRequest& request, const std::string& fingerprint) override;
  std::string name() const override { return "http"; }

  // Attempts made by the most recent send(); exposed for retry tests.
  std::size_t last_attempts() const { return last_attempts_; }

 private:
  ModelProfile profile_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::string api_key_;
  std::atomic<std::size_t> last_attempts_{0};
};

// Uniform entry point for every model call. Thread-safe.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ModelBackend> backend, ModelProfile profile = {});

  ChatResponse complete(const ChatRequest& request);
  // Convenience: builds a request with the gateway's default profile.
  ChatResponse complete(std::vector<Message> messages);

  const ModelProfile& profile() const { return profile_; }
  ModelBackend& backend() { return *backend_; }

  void set_recording(bool on);
  std::vector<TranscriptRecord> transcript() const;
  // Writes the transcript as a queue-mode fixture with fingerprints.
  void write_fixture(const std::filesystem::path& path) const;

  std::size_t call_count() const;

 private:
  std::shared_ptr<ModelBackend> backend_;
  ModelProfile profile_;
  mutable std::mutex mu_;
  bool recording_ = false;
  std::vector<TranscriptRecord> transcript_;
  std::size_t calls_ = 0;
};

}  // namespace iecache
