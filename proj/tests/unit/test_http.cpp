#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"

using namespace iecache;

namespace {

// Local OpenAI-compatible stand-in that fails the first `failures` calls.
class MockServer {
 public:
  MockServer(int failures, int status) : failures_(failures), status_(status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (hits_ <= failures_) {
        res.status = status_;
        res.set_content("{\"error\":\"busy\"}", "application/json");
        return;
      }
      nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong  "}}}}}},
                             {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 2}}}};
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::string last_auth_;
  std::string last_body_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  int status_;
  std::atomic<int> hits_{0};
};

ModelProfile profile_for(const MockServer& s) {
  ModelProfile p;
  p.endpoint = s.base();
  p.auth_source = "IECACHE_TEST_KEY";
  p.retry_limit = 2;
  p.retry_base_delay = std::chrono::milliseconds(1);
  return p;
}

}  // namespace

TEST(HttpBackend, SendsOpenAiRequestAndParsesReply) {
  setenv("IECACHE_TEST_KEY", "secret", 1);
  MockServer server(0, 200);
  auto profile = profile_for(server);
  Gateway g(std::make_shared<HttpBackend>(profile), profile);
  auto reply = g.complete({{Role::system, "s"}, {Role::user, "ping"}});
  EXPECT_EQ(reply.content, "pong");
  EXPECT_EQ(reply.usage.prompt_tokens, 7);
  EXPECT_EQ(reply.usage.output_tokens, 2);
  EXPECT_EQ(server.last_auth_, "Bearer secret");
  auto body = nlohmann::json::parse(server.last_body_);
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][1]["content"], "ping");
  EXPECT_EQ(body["temperature"], 0.0);
}

TEST(HttpBackend, RetriesTransientStatusUpToLimit) {
  setenv("IECACHE_TEST_KEY", "secret", 1);
  MockServer server(2, 503);
  auto profile = profile_for(server);
  auto backend = std::make_shared<HttpBackend>(profile);
  Gateway g(backend, profile);
  EXPECT_EQ(g.complete({{Role::user, "ping"}}).content, "pong");
  EXPECT_EQ(backend->last_attempts(), 3u);
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpBackend, GivesUpAfterRetryLimit) {
  setenv("IECACHE_TEST_KEY", "secret", 1);
  MockServer server(10, 429);
  auto profile = profile_for(server);
  auto backend = std::make_shared<HttpBackend>(profile);
  Gateway g(backend, profile);
  EXPECT_THROW(g.complete({{Role::user, "ping"}}), TransportError);
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpBackend, ClientErrorsAreNotRetried) {
  setenv("IECACHE_TEST_KEY", "secret", 1);
  MockServer server(10, 400);
  auto profile = profile_for(server);
  Gateway g(std::make_shared<HttpBackend>(profile), profile);
  EXPECT_THROW(g.complete({{Role::user, "ping"}}), GatewayError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(HttpBackend, MissingKeyOrEndpoint) {
  unsetenv("IECACHE_TEST_MISSING");
  ModelProfile p;
  p.endpoint = "http://127.0.0.1:9/v1";
  p.auth_source = "IECACHE_TEST_MISSING";
  EXPECT_THROW(HttpBackend{p}, AuthMissing);

  unsetenv("IECACHE_API_BASE");
  setenv("IECACHE_TEST_KEY", "secret", 1);
  ModelProfile q;
  q.auth_source = "IECACHE_TEST_KEY";
  EXPECT_THROW(HttpBackend{q}, TransportError);
}

TEST(HttpBackend, UnreachableHostIsTransportError) {
  setenv("IECACHE_TEST_KEY", "secret", 1);
  ModelProfile p;
  p.endpoint = "http://127.0.0.1:1/v1";
  p.auth_source = "IECACHE_TEST_KEY";
  p.retry_limit = 1;
  p.retry_base_delay = std::chrono::milliseconds(1);
  auto backend = std::make_shared<HttpBackend>(p);
  Gateway g(backend, p);
  EXPECT_THROW(g.complete({{Role::user, "ping"}}), TransportError);
  EXPECT_EQ(backend->last_attempts(), 2u);
}
