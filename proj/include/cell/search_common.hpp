#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cell/clients.hpp"
#include "cell/metrics.hpp"
#include "cell/text_ops.hpp"
#include "cell/types.hpp"

namespace cell {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection; identical on every standard library.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// First k entries of a partial Fisher-Yates shuffle of `pool`.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

/// Runs fn(0..n-1) on up to `parallelism` threads. If any call throws, the
/// exception from the lowest index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(parallelism, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Applies an infill to span `j` of `parent`. Returns nullopt for a no-op:
/// the filled prompt is empty, equals the parent, or still holds a mask.
std::optional<Candidate> apply_infill(const SpanSplit& split, const Candidate& parent,
                                      const MaskedPrompt& masked, std::string_view filled);

struct PerturbRequest {
  const Candidate* parent = nullptr;
  int span_index = 0;
};

// Masks and infills every request (in parallel); results keep request order.
std::vector<std::optional<Candidate>> perturb_all(const SpanSplit& split,
                                                  const std::vector<PerturbRequest>& requests,
                                                  Infiller& infiller, int parallelism);

/// One scored (or skipped) perturbation, for tests and diagnostics.
struct TraceEvent {
  int pass = 0;        // outer pass (myopic) or outer iteration t (budget)
  int inner = 0;       // inner iteration (budget only)
  int span_index = 0;  // most recently masked span
  std::string prompt;
  std::string response;
  std::optional<double> score;
  bool noop = false;
};

struct SearchTrace {
  std::vector<TraceEvent> events;
  std::vector<int> selected;          // myopic: j* of each pass
  std::vector<ScheduleState> schedule;  // budget: one entry per inner iteration
};

struct SearchOptions {
  std::string id;
  // Restricts which spans may be masked; unset means all.
  std::optional<IndexSet> eligible;
  SearchTrace* trace = nullptr;
  Clock clock;
};

/// Per-search generator access with ledger charging and a prompt memo.
///
/// Strict mode charges every request. Memoized mode charges only prompts
/// not yet seen in this search; x0 is pre-seeded and never charged.
class ScoringSession {
 public:
  ScoringSession(Generator& generator, const ContrastMetric& metric, BudgetLedger& ledger,
                 const PromptText& x0, std::string y0, int parallelism);

  struct Outcome {
    std::size_t scored = 0;  // the first `scored` candidates now carry response and score
    bool budget_hit = false;
  };

  /// Scores candidates in order against (anchor_prompt, anchor_response).
  /// Stops right after the call that exhausts the budget, or before a call
  /// the ledger refuses.
  Outcome score(std::vector<Candidate>& candidates, const PromptText& anchor_prompt,
                const std::string& anchor_response);

  // Response for a single prompt, charged like any other request. nullopt
  // when the ledger refuses.
  std::optional<std::string> respond(const PromptText& prompt);

  int requests() const noexcept { return requests_; }

 private:
  Generator& generator_;
  const ContrastMetric& metric_;
  BudgetLedger& ledger_;
  int parallelism_;
  std::unordered_map<std::string, std::string> memo_;
  int requests_ = 1;  // y0
};

// Fills the record fields shared by both searches.
ExplanationRecord make_record(const SearchOptions& options, const PromptText& x0,
                              std::string y0, const SearchConfig& config, Algorithm algo);

void set_contrast(ExplanationRecord& record, const SpanSplit& split, const PromptText& prompt,
                  const std::string& response, double score,
                  const std::vector<ModificationRecord>& provenance);

}  // namespace cell
