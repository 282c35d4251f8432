#include "cell/types.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <sstream>

#include "cell/error.hpp"

namespace cell {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

PromptText PromptText::normalize(std::string_view raw) {
  std::string text = join_words(split_words(raw));
  if (text.empty()) throw Error(ErrorKind::kEmptyPrompt, "prompt has no words");
  if (text.find(kMaskToken) != std::string::npos) {
    throw Error(ErrorKind::kInvalidPrompt, "prompt contains the mask token");
  }
  return PromptText(std::move(text));
}

PromptText normalize_prompt(std::string_view raw) { return PromptText::normalize(raw); }

const std::string& SpanSplit::span(int index) const {
  if (index < 1 || index > size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "span index " + std::to_string(index) + " outside [1, " +
                    std::to_string(size()) + "]");
  }
  return spans[static_cast<std::size_t>(index - 1)];
}

IndexSet::IndexSet(std::vector<int> indices) : values_(std::move(indices)) {
  std::sort(values_.begin(), values_.end());
  if (std::adjacent_find(values_.begin(), values_.end()) != values_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "duplicate span index");
  }
  if (!values_.empty() && values_.front() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "span indices are 1-based");
  }
}

IndexSet IndexSet::range(int n) {
  std::vector<int> v(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  IndexSet s;
  s.values_ = std::move(v);
  return s;
}

bool IndexSet::contains(int index) const {
  return std::binary_search(values_.begin(), values_.end(), index);
}

bool IndexSet::within(int n_e) const { return values_.empty() || values_.back() <= n_e; }

IndexSet IndexSet::without(int index) const {
  IndexSet out;
  out.values_.reserve(values_.size());
  for (int v : values_) {
    if (v != index) out.values_.push_back(v);
  }
  return out;
}

IndexSet IndexSet::intersect(const IndexSet& other) const {
  IndexSet out;
  std::set_intersection(values_.begin(), values_.end(), other.values_.begin(),
                        other.values_.end(), std::back_inserter(out.values_));
  return out;
}

Candidate Candidate::root(PromptText prompt, int n_e) {
  return Candidate{std::move(prompt), IndexSet::range(n_e), std::nullopt, {}, {}};
}

bool provenance_consistent(const Candidate& candidate, const SpanSplit& split) {
  const int n_e = split.size();
  if (!candidate.remaining.within(n_e)) return false;
  if (candidate.provenance.size() + candidate.remaining.size() !=
      static_cast<std::size_t>(n_e)) {
    return false;
  }
  std::set<int> seen;
  for (const auto& mod : candidate.provenance) {
    if (mod.span_index < 1 || mod.span_index > n_e) return false;
    if (!seen.insert(mod.span_index).second) return false;
    if (candidate.remaining.contains(mod.span_index)) return false;
    if (mod.original_text != split.span(mod.span_index)) return false;
  }
  return true;
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::pair<std::string_view, Enum> (&table)[N],
                std::string_view what) {
  for (const auto& [key, value] : table) {
    if (key == name) return value;
  }
  std::ostringstream msg;
  msg << "unknown " << what << " '" << name << "' (expected one of:";
  for (const auto& entry : table) msg << ' ' << entry.first;
  msg << ')';
  throw Error(ErrorKind::kInvalidArgument, msg.str());
}

constexpr std::pair<std::string_view, MetricId> kMetricNames[] = {
    {"contradiction", MetricId::kContradiction},
    {"preference", MetricId::kPreference},
    {"bleu_composite", MetricId::kBleuComposite},
    {"rubric_judge", MetricId::kRubricJudge},
};
constexpr std::pair<std::string_view, Anchor> kAnchorNames[] = {
    {"original", Anchor::kOriginal},
    {"current", Anchor::kCurrent},
};
constexpr std::pair<std::string_view, BudgetMode> kBudgetModeNames[] = {
    {"strict", BudgetMode::kStrict},
    {"memoized", BudgetMode::kMemoized},
};
constexpr std::pair<std::string_view, Algorithm> kAlgorithmNames[] = {
    {"myopic", Algorithm::kMyopic},
    {"budget", Algorithm::kBudget},
};
constexpr std::pair<std::string_view, FoundStatus> kFoundNames[] = {
    {"threshold_met", FoundStatus::kThresholdMet},
    {"budget_exhausted", FoundStatus::kBudgetExhausted},
    {"search_exhausted", FoundStatus::kSearchExhausted},
    {"error", FoundStatus::kError},
};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::pair<std::string_view, Enum> (&table)[N]) {
  for (const auto& [key, v] : table) {
    if (v == value) return key;
  }
  return "unknown";
}

}  // namespace

std::string_view to_string(MetricId id) { return name_of(id, kMetricNames); }
std::string_view to_string(Anchor anchor) { return name_of(anchor, kAnchorNames); }
std::string_view to_string(BudgetMode mode) { return name_of(mode, kBudgetModeNames); }
std::string_view to_string(Algorithm algo) { return name_of(algo, kAlgorithmNames); }
std::string_view to_string(FoundStatus status) { return name_of(status, kFoundNames); }

MetricId parse_metric(std::string_view name) { return parse_enum(name, kMetricNames, "metric"); }
Anchor parse_anchor(std::string_view name) { return parse_enum(name, kAnchorNames, "anchor"); }
BudgetMode parse_budget_mode(std::string_view name) {
  return parse_enum(name, kBudgetModeNames, "budget mode");
}
Algorithm parse_algorithm(std::string_view name) {
  return parse_enum(name, kAlgorithmNames, "algorithm");
}
FoundStatus parse_found(std::string_view name) { return parse_enum(name, kFoundNames, "status"); }

void SearchConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, msg); };
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (budget < 2) fail("budget must be at least 2");
  if (!(delta >= 0.0 && delta <= 1.0)) fail("delta must lie in the metric range [0, 1]");
  if (max_iters < 1) fail("max_iters must be positive");
  if (split_k < 1) fail("split_k must be positive");
  if (parallelism < 1) fail("parallelism must be positive");
}

BudgetLedger::BudgetLedger(std::optional<int> limit, BudgetMode mode)
    : limit_(limit), mode_(mode) {}

bool BudgetLedger::try_charge() {
  std::lock_guard lock(mu_);
  if (limit_ && charged_ >= *limit_) return false;
  ++charged_;
  return true;
}

void BudgetLedger::record_hit() {
  std::lock_guard lock(mu_);
  ++cache_hits_;
}

int BudgetLedger::charged() const {
  std::lock_guard lock(mu_);
  return charged_;
}

int BudgetLedger::cache_hits() const {
  std::lock_guard lock(mu_);
  return cache_hits_;
}

bool BudgetLedger::exhausted() const {
  std::lock_guard lock(mu_);
  return limit_ && charged_ >= *limit_;
}

BestTracker::BestTracker(PromptText x0, std::string y0, double floor)
    : best_{std::move(x0), std::move(y0), floor, {}, false} {}

bool BestTracker::offer(const Candidate& candidate) {
  if (!candidate.score) return false;
  std::lock_guard lock(mu_);
  if (*candidate.score > best_.score) {
    best_ = Snapshot{candidate.prompt, candidate.response, *candidate.score,
                     candidate.provenance, true};
    return true;
  }
  return false;
}

BestTracker::Snapshot BestTracker::snapshot() const {
  std::lock_guard lock(mu_);
  return best_;
}

double BestTracker::best_score() const {
  std::lock_guard lock(mu_);
  return best_.score;
}

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

}  // namespace cell
