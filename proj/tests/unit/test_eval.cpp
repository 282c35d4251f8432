#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cell/error.hpp"
#include "cell/eval.hpp"
#include "cell/mock_clients.hpp"

using namespace cell;

namespace {

ExplanationRecord record(const std::string& id, FoundStatus found, double distance,
                         const std::string& contrast = "") {
  ExplanationRecord r{.id = id, .input_prompt = normalize_prompt("is it safe to share the file")};
  r.input_response = "No.";
  r.found = found;
  r.edit_distance = distance;
  r.algorithm = Algorithm::kBudget;
  if (!contrast.empty()) {
    r.contrast_prompt = normalize_prompt(contrast);
    r.contrast_response = "Yes.";
  }
  return r;
}

struct CountingEmbedder : Embedder {
  std::map<std::string, std::vector<double>> table;
  int calls = 0;
  std::vector<double> embed(std::string_view text) override {
    ++calls;
    return table.at(std::string(text));
  }
};

}  // namespace

TEST(FlipRate, CountsThresholdMet) {
  std::vector<ExplanationRecord> rs;
  for (int i = 0; i < 9; ++i) rs.push_back(record("m" + std::to_string(i), FoundStatus::kThresholdMet, 0.1, "x"));
  rs.push_back(record("e", FoundStatus::kSearchExhausted, 0.0));
  EXPECT_DOUBLE_EQ(flip_rate(rs), 0.9);

  std::vector<ExplanationRecord> none(3, record("n", FoundStatus::kSearchExhausted, 0.0));
  EXPECT_DOUBLE_EQ(flip_rate(none), 0.0);
}

TEST(FlipRate, EmptyBatchIsAnError) {
  try {
    flip_rate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyBatch);
  }
  EXPECT_THROW(aggregate({}), Error);
}

TEST(FlipRate, ComplementsUnflippedFraction) {
  std::mt19937_64 rng(3);
  const FoundStatus all[] = {FoundStatus::kThresholdMet, FoundStatus::kBudgetExhausted,
                             FoundStatus::kSearchExhausted, FoundStatus::kError};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ExplanationRecord> rs;
    const int n = 1 + static_cast<int>(rng() % 30);
    int other = 0;
    for (int i = 0; i < n; ++i) {
      const auto f = all[rng() % 4];
      other += f != FoundStatus::kThresholdMet;
      rs.push_back(record("r", f, 0.0));
    }
    EXPECT_NEAR(flip_rate(rs) + static_cast<double>(other) / n, 1.0, 1e-12);
  }
}

TEST(ColumnStats, HandArithmetic) {
  const auto two = column_stats({0.1, 0.3});
  EXPECT_NEAR(two.mean, 0.2, 1e-12);
  EXPECT_NEAR(two.std_error, 0.1, 1e-12);
  EXPECT_EQ(two.n, 2);
  const auto one = column_stats({0.7});
  EXPECT_DOUBLE_EQ(one.mean, 0.7);
  EXPECT_DOUBLE_EQ(one.std_error, 0.0);
  EXPECT_EQ(column_stats({}).n, 0);
}

TEST(ContentPreservation, CosineCases) {
  CountingEmbedder emb;
  emb.table = {{"left side", {1.0, 0.0}}, {"right side", {0.0, 2.0}}, {"diag side", {1.0, 1.0}},
               {"zero side", {0.0, 0.0}}, {"short", {1.0}}};
  const auto l = normalize_prompt("left side");
  EXPECT_DOUBLE_EQ(content_preservation(emb, l, l), 1.0);
  EXPECT_EQ(emb.calls, 0);
  EXPECT_DOUBLE_EQ(content_preservation(emb, l, normalize_prompt("right side")), 0.0);
  EXPECT_NEAR(content_preservation(emb, l, normalize_prompt("diag side")), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(content_preservation(emb, l, normalize_prompt("zero side")), 0.0);
  EXPECT_THROW(content_preservation(emb, l, normalize_prompt("short")), Error);
}

TEST(ContentPreservation, SelfSimilarityForHashEmbedder) {
  MockEmbedder emb(32);
  for (const char* s : {"a", "the cat sat", "one two three four five"}) {
    const auto p = normalize_prompt(s);
    EXPECT_DOUBLE_EQ(content_preservation(emb, p, p), 1.0);
  }
}

TEST(Baseline, TemplateReachesGenerator) {
  MockGenerator gen({}, "ECHO {prompt}");
  const auto x0 = normalize_prompt("is the sky blue");
  const auto y = baseline_contrast(gen, x0);
  const auto sent = gen.received();
  ASSERT_EQ(sent.size(), 2u);
  EXPECT_EQ(sent[0], "is the sky blue");
  EXPECT_EQ(sent[1],
            "Give a response to the following prompt that is less preferable than the response "
            "'ECHO is the sky blue'. Prompt: is the sky blue");
  EXPECT_EQ(y, "ECHO " + sent[1]);
}

TEST(Baseline, TemplateOverride) {
  MockGenerator gen({}, "R");
  baseline_contrast(gen, normalize_prompt("hello there"), "Worse than [{response}] for: {prompt}");
  EXPECT_EQ(gen.received().back(), "Worse than [R] for: hello there");
  EXPECT_EQ(render_baseline_prompt("{prompt}|{prompt}", normalize_prompt("p"), "r"), "p|p");
}

TEST(Aggregate, EditDistanceStatsAndGrouping) {
  std::vector<ExplanationRecord> rs = {record("a", FoundStatus::kThresholdMet, 0.1, "c one"),
                                       record("b", FoundStatus::kSearchExhausted, 0.3, "c two"),
                                       record("c", FoundStatus::kSearchExhausted, 0.0)};
  auto other = record("d", FoundStatus::kThresholdMet, 0.5, "c three");
  other.algorithm = Algorithm::kMyopic;
  rs.push_back(other);

  const auto report = aggregate(rs);
  ASSERT_EQ(report.rows.size(), 2u);
  const auto& budget = report.rows[0];
  EXPECT_EQ(budget.label, "budget/contradiction/k1");
  EXPECT_EQ(budget.records, 3);
  EXPECT_EQ(budget.flipped, 1);
  EXPECT_NEAR(budget.edit_distance.mean, 0.2, 1e-12);
  EXPECT_NEAR(budget.edit_distance.std_error, 0.1, 1e-12);
  EXPECT_EQ(budget.edit_distance_flipped.n, 1);
  EXPECT_DOUBLE_EQ(budget.edit_distance_flipped.std_error, 0.0);
  EXPECT_NEAR(budget.flip_rate.mean, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(budget.content_preservation.n, 0);
  EXPECT_EQ(report.rows[1].label, "myopic/contradiction/k1");
  EXPECT_EQ(report.rows[1].records, 1);
}

TEST(Aggregate, PreferenceAndBaselineColumns) {
  MockPreferenceScorer pref({{"No.", 3.0}, {"worse", 1.0}}, 1.0);
  auto a = record("a", FoundStatus::kThresholdMet, 0.1, "c one");
  auto b = record("b", FoundStatus::kSearchExhausted, 0.2, "c two");
  b.contrast_response = "No.";  // unchanged response
  std::map<std::string, std::string> baselines = {{"a", "worse"}, {"b", "No."}};
  AggregateOptions opts;
  opts.preference = &pref;
  opts.baselines = &baselines;
  const auto row = aggregate({a, b}, opts).rows.at(0);
  EXPECT_EQ(row.preference.n, 2);
  EXPECT_NEAR(row.preference.mean, (0.75 + 0.5) / 2, 1e-12);
  EXPECT_EQ(row.preference_flipped.n, 1);
  EXPECT_NEAR(row.preference_flipped.mean, 0.75, 1e-12);
  EXPECT_EQ(row.baseline_preference.n, 2);
  EXPECT_NEAR(row.baseline_preference.mean, (0.5 + 0.5) / 2, 1e-12);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(11);
  std::vector<ExplanationRecord> rs;
  for (int i = 0; i < 40; ++i) {
    const bool met = rng() % 2;
    auto r = record("r" + std::to_string(i), met ? FoundStatus::kThresholdMet : FoundStatus::kSearchExhausted,
                    (rng() % 1000) / 997.0, rng() % 3 ? "some contrast words" : "");
    r.generator_calls = static_cast<int>(rng() % 100);
    rs.push_back(r);
  }
  MockEmbedder emb(16);
  AggregateOptions opts;
  opts.embedder = &emb;
  const auto base = aggregate(rs, opts).to_csv();
  for (int k = 0; k < 10; ++k) {
    std::shuffle(rs.begin(), rs.end(), rng);
    opts.parallelism = 1 + k % 4;
    EXPECT_EQ(aggregate(rs, opts).to_csv(), base);
  }
}

TEST(Report, CsvIsColumnStable) {
  const auto report = aggregate({record("a", FoundStatus::kThresholdMet, 0.25, "c one")});
  const auto csv = report.to_csv();
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(header.rfind("label,records,flipped,errors,flip_rate_mean,flip_rate_se,flip_rate_n", 0), 0u);
  EXPECT_NE(header.find("preference_centered_mean"), std::string::npos);
  EXPECT_EQ(csv, aggregate({record("a", FoundStatus::kThresholdMet, 0.25, "c one")}).to_csv());

  const auto j = report.to_json();
  EXPECT_EQ(j.at("rows").size(), 1u);
  EXPECT_DOUBLE_EQ(j["rows"][0]["edit_distance"]["mean"].get<double>(), 0.25);
  EXPECT_TRUE(j["rows"][0]["preference"]["mean"].is_null());
}

TEST(Report, PlotDataBinsByWords) {
  auto r = record("a", FoundStatus::kThresholdMet, 0.1, "c one");
  r.generator_calls = 12;
  r.elapsed_ms = 34;
  const auto csv = plot_data_csv({r}, 5);
  EXPECT_EQ(csv, "id,label,prompt_words,word_bin,generator_calls,elapsed_ms,found\n"
                 "a,budget/contradiction/k1,7,5,12,34,threshold_met\n");
  EXPECT_THROW(plot_data_csv({r}, 0), Error);
}

TEST(Baseline, PlaceholdersInsideValuesStayLiteral) {
  EXPECT_EQ(render_baseline_prompt("[{response}] {prompt}", normalize_prompt("say {response}"), "a {prompt}"),
            "[a {prompt}] say {response}");
}
