#include <gtest/gtest.h>

#include "cell/error.hpp"
#include "cell/record_io.hpp"

using namespace cell;
using nlohmann::json;

namespace {

ExplanationRecord full_record() {
  ExplanationRecord r{.id = "row-7", .input_prompt = normalize_prompt("I said could kill him")};
  r.input_response = "He is dangerous.";
  r.contrast_prompt = normalize_prompt("I said could go back him");
  r.contrast_response = "He is leaving.";
  r.score = 0.875;
  r.found = FoundStatus::kThresholdMet;
  r.modifications = {{2, "could kill", "could go back"}};
  r.generator_calls = 17;
  r.generator_requests = 21;
  r.cache_hits = 4;
  r.elapsed_ms = 1234;
  r.edit_distance = 0.4;
  r.metric = MetricId::kPreference;
  r.algorithm = Algorithm::kMyopic;
  r.config.split_k = 2;
  r.config.anchor = Anchor::kOriginal;
  r.config.budget_mode = BudgetMode::kStrict;
  r.config.seed = 18446744073709551615ULL;
  return r;
}

}  // namespace

TEST(RecordIo, RoundTrip) {
  const auto r = full_record();
  const auto j = record_to_json(r);
  const auto back = record_from_json(j);
  EXPECT_EQ(record_to_json(back), j);
  EXPECT_EQ(back.modifications, r.modifications);
  EXPECT_EQ(back.config.seed, r.config.seed);
  EXPECT_EQ(*back.contrast_prompt, *r.contrast_prompt);
}

TEST(RecordIo, FieldNames) {
  const auto j = record_to_json(full_record());
  for (const char* key : {"id", "input_prompt", "input_response", "contrast_prompt", "contrast_response",
                          "score", "found", "modifications", "generator_calls", "elapsed_ms",
                          "edit_distance", "metric_id", "algorithm", "config"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["found"], "threshold_met");
  EXPECT_EQ(j["metric_id"], "preference");
  EXPECT_EQ(j["modifications"][0]["replacement"], "could go back");
}

TEST(RecordIo, AbsentContrastIsNull) {
  auto r = full_record();
  r.contrast_prompt.reset();
  r.contrast_response.reset();
  r.found = FoundStatus::kSearchExhausted;
  const auto j = record_to_json(r);
  EXPECT_TRUE(j["contrast_prompt"].is_null());
  EXPECT_FALSE(record_from_json(j).contrast_prompt.has_value());
}

TEST(RecordIo, MalformedInput) {
  auto j = record_to_json(full_record());
  j.erase("found");
  EXPECT_THROW(record_from_json(j), Error);
  j = record_to_json(full_record());
  j["score"] = "high";
  EXPECT_THROW(record_from_json(j), Error);
}

TEST(RecordIo, ConfigRoundTripAndLines) {
  SearchConfig c;
  c.alpha = 0.25;
  c.metric = MetricId::kRubricJudge;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_FALSE(back.anchor.has_value());

  const auto diag = diagnostic_row("x", 3, "line 3: invalid JSON");
  EXPECT_EQ(diag["found"], "error");
  EXPECT_EQ(diag["line"], 3);
  const auto line = to_jsonl_line(diag);
  EXPECT_EQ(line.find('\n'), line.size() - 1);
  EXPECT_EQ(json::parse(line), diag);
}
