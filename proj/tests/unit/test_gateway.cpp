#include <gtest/gtest.h>

#include <thread>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/hashing.hpp"
#include "support.hpp"

using namespace iecache;
namespace ts = testing_support;

TEST(Fingerprint, MatchesDefinition) {
  std::vector<Message> m{{Role::system, "s"}, {Role::user, "hello"}};
  EXPECT_EQ(fingerprint(m), sha256_hex("system\ns\nuser\nhello\n"));
  m[1].content = "hello ";
  EXPECT_NE(fingerprint(m), sha256_hex("system\ns\nuser\nhello\n"));
}

TEST(ChatRequestValidation, RejectsEmptyAndAssistantFirst) {
  Gateway g(ScriptedBackend::from_contents({"x"}));
  EXPECT_THROW(g.complete(std::vector<Message>{}), Error);
  EXPECT_THROW(g.complete(std::vector<Message>{{Role::assistant, "hi"}}), Error);
  ChatRequest bad{{{Role::user, "q"}}, {}};
  bad.profile.max_output_tokens = 0;
  EXPECT_THROW(g.complete(bad), ConfigError);
  EXPECT_EQ(g.call_count(), 0u);
}

TEST(ScriptedBackend, QueueServesInOrderThenExhausts) {
  auto s = ts::scripted({"first  \n", "second"});
  EXPECT_EQ(s.gateway->complete({{Role::user, "a"}}).content, "first");
  EXPECT_EQ(s.gateway->complete({{Role::user, "a"}}).content, "second");
  EXPECT_THROW(s.gateway->complete({{Role::user, "a"}}), FixtureExhausted);
  EXPECT_EQ(s.gateway->call_count(), 2u);
}

TEST(ScriptedBackend, MapModeKeysByFingerprintAndFallsBackToQueue) {
  const std::vector<Message> keyed{{Role::user, "keyed"}};
  std::string fixture = "{\"mode\":\"map\"}\n{\"fingerprint\":\"" + fingerprint(keyed) +
                        "\",\"content\":\"K\"}\n\n{\"content\":\"Q1\"}\n{\"content\":\"Q2\"}\n";
  Gateway g(ScriptedBackend::from_fixture_text(fixture));
  EXPECT_EQ(g.complete(keyed).content, "K");
  EXPECT_EQ(g.complete({{Role::user, "other"}}).content, "Q1");
  EXPECT_EQ(g.complete(keyed).content, "K");
  EXPECT_EQ(g.complete({{Role::user, "other"}}).content, "Q2");
  EXPECT_THROW(g.complete({{Role::user, "other"}}), FixtureExhausted);
}

TEST(ScriptedBackend, FixtureErrorsCarryLine) {
  try {
    ScriptedBackend::from_fixture_text("{\"mode\":\"queue\"}\n{\"content\":\"ok\"}\n{not json\n");
    FAIL();
  } catch (const FixtureParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(ScriptedBackend::from_fixture_text("{\"content\":\"no header\"}\n"), FixtureParseError);
  EXPECT_THROW(ScriptedBackend::from_fixture_text("{\"mode\":\"queue\"}\n{\"text\":\"x\"}\n"), FixtureParseError);
  EXPECT_THROW(ScriptedBackend::from_fixture("/no/such/fixture.jsonl"), NotFound);
}

TEST(ScriptedBackend, DuplicateFingerprintRejectedInMapMode) {
  std::string fp(64, 'a');
  std::string line = "{\"fingerprint\":\"" + fp + "\",\"content\":\"x\"}\n";
  EXPECT_THROW(ScriptedBackend::from_fixture_text("{\"mode\":\"map\"}\n" + line + line), FixtureParseError);
  EXPECT_NO_THROW(ScriptedBackend::from_fixture_text("{\"mode\":\"queue\"}\n" + line + line));
}

TEST(Gateway, RecordedTranscriptReplaysIdentically) {
  auto s = ts::scripted({"alpha", "beta"});
  s.gateway->set_recording(true);
  s.gateway->complete({{Role::system, "sys"}, {Role::user, "one"}});
  s.gateway->complete({{Role::user, "two"}});
  auto tr = s.gateway->transcript();
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr[1].sequence_index, 1u);
  EXPECT_EQ(tr[0].request_fingerprint, fingerprint({{Role::system, "sys"}, {Role::user, "one"}}));

  auto dir = ts::temp_dir("rec");
  s.gateway->write_fixture(dir / "f.jsonl");
  Gateway replay(ScriptedBackend::from_fixture(dir / "f.jsonl"));
  EXPECT_EQ(replay.complete({{Role::system, "sys"}, {Role::user, "one"}}).content, "alpha");
  EXPECT_EQ(replay.complete({{Role::user, "two"}}).content, "beta");
  std::filesystem::remove_all(dir);
}

TEST(Gateway, ConcurrentCallsEachGetOneReply) {
  std::vector<std::string> replies;
  for (int i = 0; i < 64; ++i) replies.push_back("r" + std::to_string(i));
  auto s = ts::scripted(replies);
  std::vector<std::thread> threads;
  std::vector<std::string> got(64);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 8; ++k) got[t * 8 + k] = s.gateway->complete({{Role::user, "x"}}).content;
    });
  }
  for (auto& th : threads) th.join();
  std::sort(got.begin(), got.end());
  std::sort(replies.begin(), replies.end());
  EXPECT_EQ(got, replies);
  EXPECT_EQ(s.backend->remaining(), 0u);
}
