#include <gtest/gtest.h>

#include "iecache/errors.hpp"
#include "iecache/hashing.hpp"
#include "iecache/trace.hpp"
#include "support.hpp"

using namespace iecache;
namespace ts = testing_support;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

RunTrace golden() { return read_trace(ts::fixture("golden/loop-1.trace.jsonl")); }

}  // namespace

TEST(Trace, SerializeParseIsByteStable) {
  const std::string text = ts::slurp(ts::fixture("golden/loop-1.trace.jsonl"));
  EXPECT_EQ(serialize_trace(parse_trace(text)), text);
}

TEST(Trace, GoldenIsValid) {
  auto t = golden();
  EXPECT_TRUE(trace_violations(t).empty());
  EXPECT_EQ(t.count(Phase::reason), 3u);
  EXPECT_EQ(t.total_model_calls(), 9u);
  EXPECT_NE(summarize_trace(t).find("final"), std::string::npos);
}

TEST(Trace, CorruptedDigestNamesTheStep) {
  auto t = read_trace(ts::fixture("corrupt_digest.trace.jsonl"));
  auto v = trace_violations(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("step 1"), std::string::npos);
  EXPECT_NE(v[0].find("update"), std::string::npos);
  EXPECT_THROW(validate_trace(t), ValidationError);
}

TEST(Trace, AblationInvariant) {
  auto t = golden();
  t.config["update_enabled"] = false;
  EXPECT_TRUE(mentions(trace_violations(t), "ablation"));
}

TEST(Trace, PhaseGrammarViolations) {
  auto t = golden();
  t.steps.erase(t.steps.begin() + 3);  // drop the first seek's extract
  EXPECT_TRUE(mentions(trace_violations(t), "phase grammar"));

  auto u = golden();
  u.terminated_by = TerminatedBy::step_limit;
  EXPECT_TRUE(mentions(trace_violations(u), "termination"));

  auto w = golden();
  w.config["max_steps"] = 2;
  EXPECT_TRUE(mentions(trace_violations(w), "step bound"));

  auto x = golden();
  x.steps.pop_back();
  EXPECT_FALSE(trace_violations(x).empty());
}

TEST(Trace, BaselineShapes) {
  RunTrace g;
  g.task_id = "t";
  g.method = Method::generic;
  g.answer = "a";
  g.terminated_by = TerminatedBy::final;
  StepRecord s;
  s.step = 1;
  s.phase = Phase::final;
  s.model_calls = 1;
  g.steps.push_back(s);
  EXPECT_TRUE(trace_violations(g).empty());
  g.steps.push_back(s);
  EXPECT_FALSE(trace_violations(g).empty());
}

TEST(Trace, ReactScratchpadMustOnlyGrow) {
  RunTrace t;
  t.task_id = "r";
  t.method = Method::react;
  t.terminated_by = TerminatedBy::final;
  t.config["max_steps"] = 4;
  auto step = [&](std::size_t n, Phase p, std::string pad, std::optional<Action> a) {
    StepRecord s;
    s.step = n;
    s.phase = p;
    s.cache_rendering = pad;
    s.cache_digest = sha256_hex(pad);
    s.action = a;
    t.steps.push_back(s);
  };
  step(1, Phase::reason, "", ReadAction{0});
  step(2, Phase::reason, "T1\n\nO1", FinalAction{"x"});
  step(2, Phase::final, "T1\n\nO1\n\nT2", std::nullopt);
  EXPECT_TRUE(trace_violations(t).empty()) << trace_violations(t).front();
  t.steps[2].cache_rendering = "XX";
  t.steps[2].cache_digest = sha256_hex("XX");
  EXPECT_TRUE(mentions(trace_violations(t), "scratchpad"));
}

TEST(Trace, MissingFileAndBadJson) {
  EXPECT_THROW(read_trace("/no/such/trace.jsonl"), NotFound);
  EXPECT_THROW(parse_trace("{not json}\n"), Error);
}
