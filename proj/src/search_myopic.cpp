#include "cell/search_myopic.hpp"

#include <map>

#include "cell/error.hpp"

namespace cell {

ExplanationRecord cell_search(const PromptText& x0, Generator& generator, Infiller& infiller,
                              const ContrastMetric& metric, const SearchConfig& config,
                              const SearchOptions& options) {
  config.validate();
  const Clock clock = options.clock ? options.clock : steady_clock_ms();
  const std::int64_t started = clock();

  const SpanSplit split = split_tokens(x0, config.split_k);
  const int n_e = split.size();
  IndexSet eligible = IndexSet::range(n_e);
  if (options.eligible) eligible = eligible.intersect(*options.eligible);
  const Anchor anchor = config.anchor.value_or(Anchor::kCurrent);

  BudgetLedger ledger(std::nullopt, config.budget_mode);
  ExplanationRecord record = make_record(options, x0, {}, config, Algorithm::kMyopic);
  record.metric = metric.id();
  int requests = 1;

  auto finish = [&](FoundStatus status) {
    record.found = status;
    record.generator_calls = ledger.charged();
    record.cache_hits = ledger.cache_hits();
    record.generator_requests = requests;
    record.elapsed_ms = clock() - started;
    return record;
  };

  try {
    record.input_response = generator.generate(x0);
    const std::string& y0 = record.input_response;
    ScoringSession session(generator, metric, ledger, x0, y0, config.parallelism);
    BestTracker best(x0, y0, metric.null_value());

    Candidate current = Candidate::root(x0, n_e);
    std::map<int, int> noop_streak;
    int pass = 0;
    for (IndexSet pool = eligible; !pool.empty();
         pool = current.remaining.intersect(eligible)) {
      ++pass;
      // Unlimited ledger: respond() always yields a value.
      const std::string y_c = *session.respond(current.prompt);
      requests = session.requests();
      const PromptText& anchor_prompt = anchor == Anchor::kCurrent ? current.prompt : x0;
      const std::string& anchor_response = anchor == Anchor::kCurrent ? y_c : y0;

      std::vector<PerturbRequest> batch;
      for (int j : pool.values()) batch.push_back({&current, j});
      auto perturbed = perturb_all(split, batch, infiller, config.parallelism);

      std::vector<Candidate> children;
      std::vector<int> child_span;
      for (std::size_t k = 0; k < perturbed.size(); ++k) {
        const int j = batch[k].span_index;
        if (!perturbed[k]) {
          if (options.trace) options.trace->events.push_back({pass, 0, j, {}, {}, {}, true});
          if (++noop_streak[j] >= n_e) eligible = eligible.without(j);
          continue;
        }
        noop_streak[j] = 0;
        children.push_back(std::move(*perturbed[k]));
        child_span.push_back(j);
      }
      if (children.empty()) continue;

      session.score(children, anchor_prompt, anchor_response);
      requests = session.requests();

      std::size_t arg = 0;
      for (std::size_t k = 0; k < children.size(); ++k) {
        best.offer(children[k]);
        if (options.trace) {
          options.trace->events.push_back({pass, 0, child_span[k], children[k].prompt.text(),
                                           children[k].response, children[k].score, false});
        }
        if (*children[k].score > *children[arg].score) arg = k;
      }
      if (options.trace) options.trace->selected.push_back(child_span[arg]);

      Candidate& chosen = children[arg];
      if (*chosen.score >= config.delta) {
        set_contrast(record, split, chosen.prompt, chosen.response, *chosen.score,
                     chosen.provenance);
        return finish(FoundStatus::kThresholdMet);
      }
      current = std::move(chosen);
    }

    const auto snap = best.snapshot();
    record.score = snap.score;
    if (snap.improved) {
      set_contrast(record, split, snap.prompt, snap.response, snap.score, snap.provenance);
    }
    return finish(FoundStatus::kSearchExhausted);
  } catch (const Error& e) {
    if (!is_client_error(e.kind())) throw;
    record.error = e.what();
    return finish(FoundStatus::kError);
  }
}

}  // namespace cell
