#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "cell/error.hpp"
#include "cell/text_ops.hpp"
#include "cell/types.hpp"

using namespace cell;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kConfig;
}

}  // namespace

TEST(PromptText, CollapsesWhitespace) {
  EXPECT_EQ(normalize_prompt("a  b\tc ").text(), "a b c");
  EXPECT_EQ(normalize_prompt("hello").text(), "hello");
  EXPECT_EQ(normalize_prompt("\n x \r\n y ").text(), "x y");
}

TEST(PromptText, RejectsEmptyAndMask) {
  EXPECT_EQ(kind_of([] { normalize_prompt(""); }), ErrorKind::kEmptyPrompt);
  EXPECT_EQ(kind_of([] { normalize_prompt(" \t\n"); }), ErrorKind::kEmptyPrompt);
  EXPECT_EQ(kind_of([] { normalize_prompt("fill <mask> here"); }), ErrorKind::kInvalidPrompt);
}

TEST(PromptText, NormalizeRoundTripProperty) {
  std::mt19937 rng(3);
  const std::vector<std::string> pieces{"a", "bb", "c.", " ", "  ", "\t", "\n", "dd,"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw = "w";
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) raw += pieces[rng() % pieces.size()];
    const auto p = normalize_prompt(raw);
    EXPECT_EQ(normalize_prompt(p.text()), p);
    EXPECT_EQ(p.text().find("  "), std::string::npos);
  }
}

TEST(IndexSet, Basics) {
  const auto all = IndexSet::range(4);
  EXPECT_EQ(all.values(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_TRUE(all.contains(3));
  EXPECT_FALSE(all.without(3).contains(3));
  EXPECT_EQ(all.without(3).size(), 3u);
  EXPECT_EQ(all.intersect(IndexSet({2, 4, 9})).values(), (std::vector<int>{2, 4}));
  EXPECT_TRUE(all.within(4));
  EXPECT_FALSE(IndexSet({5}).within(4));
  EXPECT_EQ(IndexSet({3, 1, 2}).values(), (std::vector<int>{1, 2, 3}));
}

TEST(IndexSet, RejectsDuplicatesAndNonPositive) {
  EXPECT_EQ(kind_of([] { IndexSet({1, 1}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { IndexSet({0}); }), ErrorKind::kInvalidArgument);
}

TEST(SearchConfig, Validation) {
  SearchConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = [](auto mutate) {
    SearchConfig c;
    mutate(c);
    return kind_of([&] { c.validate(); });
  };
  EXPECT_EQ(bad([](SearchConfig& c) { c.alpha = 1.5; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.alpha = -0.1; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.budget = 1; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.delta = 1.2; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.split_k = 0; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.max_iters = 0; }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(bad([](SearchConfig& c) { c.parallelism = 0; }), ErrorKind::kInvalidArgument);
}

TEST(BudgetLedger, StrictLimit) {
  BudgetLedger ledger(3, BudgetMode::kStrict);
  EXPECT_TRUE(ledger.try_charge());
  EXPECT_TRUE(ledger.try_charge());
  EXPECT_FALSE(ledger.exhausted());
  EXPECT_TRUE(ledger.try_charge());
  EXPECT_TRUE(ledger.exhausted());
  EXPECT_FALSE(ledger.try_charge());
  EXPECT_EQ(ledger.charged(), 3);
}

TEST(BudgetLedger, HitsDoNotCharge) {
  BudgetLedger ledger(2, BudgetMode::kMemoized);
  ledger.record_hit();
  ledger.record_hit();
  EXPECT_EQ(ledger.charged(), 0);
  EXPECT_EQ(ledger.cache_hits(), 2);
}

TEST(BudgetLedger, ConcurrentChargesNeverExceedLimit) {
  BudgetLedger ledger(500, BudgetMode::kStrict);
  std::atomic<int> granted{0};
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 1000; ++i) granted += ledger.try_charge();
      });
    }
  }
  EXPECT_EQ(granted.load(), 500);
  EXPECT_EQ(ledger.charged(), 500);
}

TEST(BudgetLedger, UnlimitedNeverExhausts) {
  BudgetLedger ledger(std::nullopt, BudgetMode::kStrict);
  for (int i = 0; i < 1000; ++i) ASSERT_TRUE(ledger.try_charge());
  EXPECT_FALSE(ledger.exhausted());
}

TEST(BestTracker, KeepsStrictMaximum) {
  const auto x0 = normalize_prompt("a b c");
  BestTracker best(x0, "y0");
  auto cand = [&](const char* text, double s) {
    auto c = Candidate::root(normalize_prompt(text), 3);
    c.score = s;
    c.response = text;
    return c;
  };
  EXPECT_EQ(best.best_score(), 0.0);
  EXPECT_FALSE(best.snapshot().improved);
  EXPECT_TRUE(best.offer(cand("x b c", 0.4)));
  EXPECT_FALSE(best.offer(cand("y b c", 0.4)));  // ties keep the first
  EXPECT_FALSE(best.offer(cand("z b c", 0.1)));
  EXPECT_TRUE(best.offer(cand("w b c", 0.9)));
  const auto snap = best.snapshot();
  EXPECT_EQ(snap.prompt.text(), "w b c");
  EXPECT_DOUBLE_EQ(snap.score, 0.9);
  EXPECT_TRUE(snap.improved);
}

TEST(BestTracker, FloorMustBeBeaten) {
  BestTracker best(normalize_prompt("a"), "y0", 0.5);
  auto c = Candidate::root(normalize_prompt("b"), 1);
  c.score = 0.5;
  EXPECT_FALSE(best.offer(c));
  c.score = std::nullopt;
  EXPECT_FALSE(best.offer(c));
  EXPECT_DOUBLE_EQ(best.best_score(), 0.5);
}

TEST(Enums, RoundTrip) {
  for (auto m : {MetricId::kContradiction, MetricId::kPreference, MetricId::kBleuComposite,
                 MetricId::kRubricJudge}) {
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
  for (auto s : {FoundStatus::kThresholdMet, FoundStatus::kBudgetExhausted,
                 FoundStatus::kSearchExhausted, FoundStatus::kError}) {
    EXPECT_EQ(parse_found(to_string(s)), s);
  }
  EXPECT_EQ(parse_anchor("current"), Anchor::kCurrent);
  EXPECT_EQ(parse_budget_mode("strict"), BudgetMode::kStrict);
  EXPECT_EQ(parse_algorithm("budget"), Algorithm::kBudget);
  EXPECT_EQ(kind_of([] { parse_metric("bogus"); }), ErrorKind::kInvalidArgument);
}

TEST(Candidate, RootAndProvenance) {
  const auto x0 = normalize_prompt("the cat sat");
  const auto split = split_tokens(x0, 1);
  auto root = Candidate::root(x0, split.size());
  EXPECT_EQ(root.remaining, IndexSet::range(3));
  EXPECT_FALSE(root.score.has_value());
  EXPECT_TRUE(provenance_consistent(root, split));

  Candidate child{normalize_prompt("the dog sat"), IndexSet({1, 3}), std::nullopt,
                  {{2, "cat", "dog"}}, {}};
  EXPECT_TRUE(provenance_consistent(child, split));
  child.remaining = IndexSet({1, 2, 3});
  EXPECT_FALSE(provenance_consistent(child, split));
  child.remaining = IndexSet({1, 3});
  child.provenance[0].original_text = "cow";
  EXPECT_FALSE(provenance_consistent(child, split));
}

TEST(Error, KindAndMessage) {
  const Error e(ErrorKind::kAuth, "environment variable X is not set");
  EXPECT_EQ(e.kind(), ErrorKind::kAuth);
  EXPECT_EQ(e.message(), "environment variable X is not set");
  EXPECT_STREQ(e.what(), "Auth: environment variable X is not set");
  EXPECT_TRUE(is_client_error(ErrorKind::kNetwork));
  EXPECT_FALSE(is_client_error(ErrorKind::kConfig));
}
