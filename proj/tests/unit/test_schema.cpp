#include <gtest/gtest.h>

#include <random>

#include "iecache/errors.hpp"
#include "iecache/gateway.hpp"
#include "iecache/prompts.hpp"
#include "iecache/schema.hpp"
#include "support.hpp"

using namespace iecache;
namespace ts = testing_support;

TEST(SlotName, Normalisation) {
  EXPECT_EQ(normalize_slot_name("Meeting Day"), "meeting_day");
  EXPECT_EQ(normalize_slot_name("  --Start-Time!! "), "start_time");
  EXPECT_EQ(normalize_slot_name("a__b"), "a_b");
  EXPECT_FALSE(normalize_slot_name("9lives"));
  EXPECT_FALSE(normalize_slot_name("___"));
}

TEST(ValueKindLabels, Synonyms) {
  bool known = false;
  EXPECT_EQ(value_kind_from_label("Integer", &known), ValueKind::number);
  EXPECT_TRUE(known);
  EXPECT_EQ(value_kind_from_label("timestamp"), ValueKind::datetime);
  EXPECT_EQ(value_kind_from_label("enum", &known), ValueKind::text);
  EXPECT_FALSE(known);
  EXPECT_EQ(value_kind_from_label("bool"), ValueKind::boolean);
  EXPECT_EQ(value_kind_from_label("yes/no"), ValueKind::boolean);
}

TEST(ParseSchema, LenientRepairsAreWarned) {
  Warnings w;
  auto s = parse_schema(
      "Here you go:\n[{\"name\":\"Person Name\",\"description\":\"who\",\"kind\":\"string\"},"
      "{\"name\":\"person_name\",\"description\":\"dup\"},"
      "{\"name\":\"Age\",\"type\":\"integer\"},"
      "{\"name\":\"mood\",\"kind\":\"feeling\"}]",
      w);
  ASSERT_EQ(s.slots.size(), 3u);
  EXPECT_EQ(s.slots[0].name, "person_name");
  EXPECT_EQ(s.slots[0].description, "who");
  EXPECT_EQ(s.slots[1].kind, ValueKind::number);
  EXPECT_EQ(s.slots[2].kind, ValueKind::text);
  EXPECT_EQ(s.origin, SchemaOrigin::induced);
  EXPECT_GE(w.size(), 2u);
}

TEST(ParseSchema, TruncatesAndRejects) {
  std::string many = "[";
  for (int i = 0; i < 15; ++i) many += std::string(i ? "," : "") + "{\"name\":\"s" + std::to_string(i) + "\"}";
  many += "]";
  Warnings w;
  EXPECT_EQ(parse_schema(many, w).slots.size(), kDefaultMaxSlots);
  EXPECT_THROW(parse_schema("[]", w), SchemaParseError);
  EXPECT_THROW(parse_schema("no json", w), SchemaParseError);
  EXPECT_THROW(parse_schema("[{\"name\":\"123\"}]", w), SchemaParseError);
}

TEST(ParseSchema, RenderParseRoundTrip) {
  std::mt19937 rng(7);
  const ValueKind kinds[] = {ValueKind::text, ValueKind::number, ValueKind::datetime, ValueKind::boolean};
  for (int trial = 0; trial < 200; ++trial) {
    ExtractionSchema s;
    const int n = 1 + static_cast<int>(rng() % kDefaultMaxSlots);
    for (int i = 0; i < n; ++i) {
      s.slots.push_back(SchemaSlot{"slot_" + std::to_string(i) + "_x" + std::to_string(rng() % 9),
                                   "desc \"" + std::to_string(rng() % 100) + "\" | line\nbreak", kinds[rng() % 4]});
    }
    Warnings w;
    auto back = parse_schema(render_schema(s), w);
    EXPECT_EQ(back, s);
    EXPECT_TRUE(w.empty());
  }
}

TEST(StrictSchema, RejectsDefects) {
  auto ok = nlohmann::json::parse(R"([{"name":"day","description":"d","kind":"text"}])");
  EXPECT_EQ(schema_from_json_strict(ok).origin, SchemaOrigin::gold);
  EXPECT_THROW(schema_from_json_strict(nlohmann::json::parse(R"([{"name":"Day","kind":"text"}])")),
               SchemaParseError);
  EXPECT_THROW(schema_from_json_strict(nlohmann::json::parse(R"([{"name":"day","kind":"color"}])")),
               SchemaParseError);
  EXPECT_THROW(
      schema_from_json_strict(nlohmann::json::parse(R"([{"name":"day","kind":"text"},{"name":"day","kind":"text"}])")),
      SchemaParseError);
  EXPECT_THROW(load_gold_schema("/no/such/schema.json"), NotFound);
}

TEST(InduceSchema, RepairsThenSucceeds) {
  auto s = ts::scripted({"I think a table of names.", R"([{"name":"name","description":"a name","kind":"text"}])"});
  auto r = induce_schema("Who?", *s.gateway, PromptSet::defaults(), 2);
  EXPECT_EQ(r.model_calls, 2u);
  EXPECT_EQ(r.schema.slots.size(), 1u);
  EXPECT_EQ(s.gateway->call_count(), 2u);
}

TEST(InduceSchema, FailsAfterRetriesExhausted) {
  auto s = ts::scripted({"nope", "still no", "never"});
  EXPECT_THROW(induce_schema("Who?", *s.gateway, PromptSet::defaults(), 2), SchemaParseError);
  EXPECT_EQ(s.gateway->call_count(), 3u);
}
