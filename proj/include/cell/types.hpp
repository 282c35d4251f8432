#pragma once

// Domain types shared by the search, metric and reporting code.
//
// Span indices are 1-based throughout: a prompt split into n_e spans has
// indices 1..n_e, and an IndexSet holds the spans that have not been
// perturbed yet.

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cell {

inline constexpr std::string_view kMaskToken = "<mask>";

// Splits on any run of whitespace; never returns empty words.
std::vector<std::string> split_words(std::string_view text);

std::string join_words(const std::vector<std::string>& words);

/// A whitespace-normalized, non-empty prompt without mask tokens.
class PromptText {
 public:
  /// Collapses whitespace runs to single spaces and trims both ends.
  /// Throws Error(kEmptyPrompt) when no words remain and
  /// Error(kInvalidPrompt) when the text contains the mask literal.
  static PromptText normalize(std::string_view raw);

  const std::string& text() const noexcept { return text_; }
  std::vector<std::string> words() const { return split_words(text_); }
  std::size_t word_count() const { return words().size(); }

  friend bool operator==(const PromptText&, const PromptText&) = default;

 private:
  explicit PromptText(std::string text) : text_(std::move(text)) {}

  std::string text_;
};

PromptText normalize_prompt(std::string_view raw);

struct SpanSplit {
  std::vector<std::string> spans;
  int split_k = 1;

  int size() const { return static_cast<int>(spans.size()); }
  // 1-based.
  const std::string& span(int index) const;
};

/// Sorted set of 1-based span indices.
class IndexSet {
 public:
  IndexSet() = default;
  // Throws Error(kInvalidArgument) on duplicates or non-positive entries.
  explicit IndexSet(std::vector<int> indices);

  static IndexSet range(int n);

  bool contains(int index) const;
  bool empty() const noexcept { return values_.empty(); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<int>& values() const noexcept { return values_; }
  bool within(int n_e) const;

  IndexSet without(int index) const;
  IndexSet intersect(const IndexSet& other) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<int> values_;
};

struct ModificationRecord {
  int span_index = 0;
  std::string original_text;
  std::string replacement_text;

  friend bool operator==(const ModificationRecord&,
                         const ModificationRecord&) = default;
};

/// A perturbed prompt with the spans it has left untouched and, once
/// scored, its response and metric value.
struct Candidate {
  PromptText prompt;
  IndexSet remaining;
  std::optional<double> score;
  std::vector<ModificationRecord> provenance;
  std::string response;

  static Candidate root(PromptText prompt, int n_e);
};

// |provenance| = n_e - |remaining|, indices distinct, disjoint from
// `remaining`, and each original_text matching the split.
bool provenance_consistent(const Candidate& candidate, const SpanSplit& split);

enum class MetricId { kContradiction, kPreference, kBleuComposite, kRubricJudge };
enum class Anchor { kOriginal, kCurrent };
enum class BudgetMode { kStrict, kMemoized };
enum class Algorithm { kMyopic, kBudget };
enum class FoundStatus { kThresholdMet, kBudgetExhausted, kSearchExhausted, kError };

std::string_view to_string(MetricId id);
std::string_view to_string(Anchor anchor);
std::string_view to_string(BudgetMode mode);
std::string_view to_string(Algorithm algo);
std::string_view to_string(FoundStatus status);

// Parsers throw Error(kInvalidArgument) on unknown names.
MetricId parse_metric(std::string_view name);
Anchor parse_anchor(std::string_view name);
BudgetMode parse_budget_mode(std::string_view name);
Algorithm parse_algorithm(std::string_view name);
FoundStatus parse_found(std::string_view name);

struct SearchConfig {
  double delta = 0.5;
  int budget = 100;
  int max_iters = 10;
  double alpha = 0.5;
  int split_k = 1;
  std::uint64_t seed = 42;
  MetricId metric = MetricId::kContradiction;
  // Unset means the algorithm's own default: current for the myopic search,
  // original for the budgeted one.
  std::optional<Anchor> anchor;
  BudgetMode budget_mode = BudgetMode::kMemoized;
  int parallelism = 1;

  // Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;
};

/// Counts charged generator calls against an optional hard limit.
class BudgetLedger {
 public:
  BudgetLedger(std::optional<int> limit, BudgetMode mode);

  // Reserves one call. Returns false, without charging, once the limit is
  // reached.
  bool try_charge();
  void record_hit();

  int charged() const;
  int cache_hits() const;
  bool exhausted() const;
  BudgetMode mode() const noexcept { return mode_; }
  std::optional<int> limit() const noexcept { return limit_; }

 private:
  mutable std::mutex mu_;
  std::optional<int> limit_;
  BudgetMode mode_;
  int charged_ = 0;
  int cache_hits_ = 0;
};

class BestTracker {
 public:
  struct Snapshot {
    PromptText prompt;
    std::string response;
    double score = 0.0;
    std::vector<ModificationRecord> provenance;
    bool improved = false;
  };

  // `floor` is the score a candidate must beat to count as an improvement.
  BestTracker(PromptText x0, std::string y0, double floor = 0.0);

  // Replaces the best entry when the candidate's score is strictly larger.
  bool offer(const Candidate& candidate);
  Snapshot snapshot() const;
  double best_score() const;

 private:
  mutable std::mutex mu_;
  Snapshot best_;
};

struct ScheduleState {
  int q = 0;
  int t = 0;
  int n_c = 0;
  int m = 0;
  int n_s = 0;
  int inner_j = 0;
};

struct ExplanationRecord {
  std::string id;
  PromptText input_prompt;
  std::string input_response;
  std::optional<PromptText> contrast_prompt;
  std::optional<std::string> contrast_response;
  double score = 0.0;
  FoundStatus found = FoundStatus::kSearchExhausted;
  std::vector<ModificationRecord> modifications;
  int generator_calls = 0;     // charged against the ledger
  int generator_requests = 0;  // every request, including y0 and memo hits
  int cache_hits = 0;
  std::int64_t elapsed_ms = 0;
  double edit_distance = 0.0;
  MetricId metric = MetricId::kContradiction;
  Algorithm algorithm = Algorithm::kBudget;
  SearchConfig config;
  std::optional<std::string> error;
};

// Milliseconds from an arbitrary epoch.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

}  // namespace cell
