#include "cell/search_common.hpp"

#include <algorithm>
#include <limits>

#include "cell/error.hpp"

namespace cell {

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "uniform_below(0)");
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::optional<Candidate> apply_infill(const SpanSplit& split, const Candidate& parent,
                                      const MaskedPrompt& masked, std::string_view filled) {
  if (filled.find(kMaskToken) != std::string_view::npos) return std::nullopt;
  const int j = masked.masked_index;
  ModificationRecord mod{j, split.span(j), extract_replacement(masked, filled)};

  auto provenance = parent.provenance;
  provenance.push_back(mod);
  const std::string text = join_words(current_spans(split, provenance));
  if (text.empty() || text == parent.prompt.text()) return std::nullopt;

  return Candidate{PromptText::normalize(text), parent.remaining.without(j), std::nullopt,
                   std::move(provenance), {}};
}

std::vector<std::optional<Candidate>> perturb_all(const SpanSplit& split,
                                                  const std::vector<PerturbRequest>& requests,
                                                  Infiller& infiller, int parallelism) {
  std::vector<std::optional<Candidate>> out(requests.size());
  parallel_for(requests.size(), parallelism, [&](std::size_t i) {
    const auto& req = requests[i];
    const MaskedPrompt masked = mask(split, *req.parent, req.span_index);
    out[i] = apply_infill(split, *req.parent, masked, infiller.infill(masked));
  });
  return out;
}

ScoringSession::ScoringSession(Generator& generator, const ContrastMetric& metric,
                               BudgetLedger& ledger, const PromptText& x0, std::string y0,
                               int parallelism)
    : generator_(generator), metric_(metric), ledger_(ledger), parallelism_(parallelism) {
  memo_.emplace(x0.text(), std::move(y0));
}

ScoringSession::Outcome ScoringSession::score(std::vector<Candidate>& candidates,
                                              const PromptText& anchor_prompt,
                                              const std::string& anchor_response) {
  constexpr std::size_t kMemo = std::numeric_limits<std::size_t>::max();
  const bool memoized = ledger_.mode() == BudgetMode::kMemoized;

  // Plan sequentially so charging order never depends on thread timing.
  Outcome outcome;
  std::vector<std::size_t> slot(candidates.size(), kMemo);
  std::vector<const PromptText*> calls;
  std::unordered_map<std::string, std::size_t> planned;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::string& key = candidates[i].prompt.text();
    if (memoized && memo_.contains(key)) {
      ledger_.record_hit();
    } else if (auto it = planned.find(key); memoized && it != planned.end()) {
      ledger_.record_hit();
      slot[i] = it->second;
    } else {
      if (!ledger_.try_charge()) {
        outcome.budget_hit = true;
        break;
      }
      slot[i] = calls.size();
      planned.emplace(key, calls.size());
      calls.push_back(&candidates[i].prompt);
    }
    ++requests_;
    outcome.scored = i + 1;
    if (ledger_.exhausted()) {
      outcome.budget_hit = true;
      break;
    }
  }

  std::vector<std::string> responses(calls.size());
  parallel_for(calls.size(), parallelism_,
               [&](std::size_t c) { responses[c] = generator_.generate(*calls[c]); });

  for (std::size_t i = 0; i < outcome.scored; ++i) {
    auto& cand = candidates[i];
    if (slot[i] == kMemo) {
      cand.response = memo_.at(cand.prompt.text());
    } else {
      cand.response = responses[slot[i]];
      memo_.try_emplace(cand.prompt.text(), cand.response);
    }
  }

  parallel_for(outcome.scored, parallelism_, [&](std::size_t i) {
    auto& cand = candidates[i];
    cand.score = metric_.score(anchor_prompt, cand.prompt, anchor_response, cand.response);
  });
  return outcome;
}

std::optional<std::string> ScoringSession::respond(const PromptText& prompt) {
  if (ledger_.mode() == BudgetMode::kMemoized) {
    if (auto it = memo_.find(prompt.text()); it != memo_.end()) {
      ledger_.record_hit();
      ++requests_;
      return it->second;
    }
  }
  if (!ledger_.try_charge()) return std::nullopt;
  ++requests_;
  std::string response = generator_.generate(prompt);
  memo_.try_emplace(prompt.text(), response);
  return response;
}

ExplanationRecord make_record(const SearchOptions& options, const PromptText& x0,
                              std::string y0, const SearchConfig& config, Algorithm algo) {
  ExplanationRecord record{.id = options.id, .input_prompt = x0};
  record.input_response = std::move(y0);
  record.metric = config.metric;
  record.algorithm = algo;
  record.config = config;
  return record;
}

void set_contrast(ExplanationRecord& record, const SpanSplit& split, const PromptText& prompt,
                  const std::string& response, double score,
                  const std::vector<ModificationRecord>& provenance) {
  record.contrast_prompt = prompt;
  record.contrast_response = response;
  record.score = score;
  auto mods = provenance;
  diff_modifications(split, mods);  // validates: distinct spans, originals match
  std::stable_sort(mods.begin(), mods.end(),
                   [](const auto& a, const auto& b) { return a.span_index < b.span_index; });
  record.modifications = std::move(mods);
  record.edit_distance = report_distance(record.input_prompt, prompt);
}

}  // namespace cell
