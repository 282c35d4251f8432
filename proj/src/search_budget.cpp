#include "cell/search_budget.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "cell/error.hpp"

namespace cell {

int samples_per_iteration(int budget) {
  if (budget < 2) throw Error(ErrorKind::kInvalidArgument, "budget must be at least 2");
  return static_cast<int>(std::floor(budget / std::log2(static_cast<double>(budget))));
}

int ceil_log2(int n) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "ceil_log2 needs n >= 1");
  int bits = 0;
  while ((1LL << bits) < n) ++bits;
  return bits;
}

int num_centers(int t, int budget) {
  if (t < 1) throw Error(ErrorKind::kInvalidArgument, "iteration numbers start at 1");
  const std::int64_t q = samples_per_iteration(budget);
  // Beyond 2^29 the center count only matters as "more than any pool".
  const int e = std::min(t, 29);
  const std::int64_t pow_t = std::int64_t{1} << e;
  return static_cast<int>((e + 1) * pow_t <= q ? 2 * pow_t : pow_t);
}

namespace {

std::vector<Candidate> keep_real(std::vector<std::optional<Candidate>> perturbed) {
  std::vector<Candidate> out;
  out.reserve(perturbed.size());
  for (auto& p : perturbed) {
    if (p) out.push_back(std::move(*p));
  }
  return out;
}

}  // namespace

std::vector<Candidate> generate_centers(int m, const std::vector<Candidate>& archive,
                                        const IndexSet& unmasked, double alpha,
                                        const Candidate& root, const SpanSplit& split,
                                        Infiller& infiller, Rng& rng,
                                        const IndexSet& eligible, int parallelism) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  std::vector<const Candidate*> parents_pool;
  for (const auto& c : archive) {
    if (!c.remaining.intersect(eligible).empty()) parents_pool.push_back(&c);
  }
  const auto m1 = std::min(static_cast<std::size_t>(std::floor(alpha * m)), parents_pool.size());
  const auto m2 = std::min(static_cast<std::size_t>(m) - m1, unmasked.size());

  const auto parents = sample_without_replacement(parents_pool, m1, rng);
  const auto spans = sample_without_replacement(unmasked.values(), m2, rng);

  std::vector<PerturbRequest> requests;
  for (const Candidate* parent : parents) {
    const auto pool = parent->remaining.intersect(eligible).values();
    requests.push_back({parent, pool[uniform_below(rng, pool.size())]});
  }
  for (int j : spans) requests.push_back({&root, j});
  return keep_real(perturb_all(split, requests, infiller, parallelism));
}

std::vector<Candidate> sample_centers(const std::vector<Candidate>& centers,
                                      const SpanSplit& split, int n_s, Infiller& infiller,
                                      Rng& rng, const IndexSet& eligible, int parallelism) {
  std::vector<PerturbRequest> requests;
  for (const auto& center : centers) {
    const auto pool = center.remaining.intersect(eligible).values();
    for (int j : sample_without_replacement(pool, static_cast<std::size_t>(std::max(n_s, 0)), rng)) {
      requests.push_back({&center, j});
    }
  }
  auto samples = keep_real(perturb_all(split, requests, infiller, parallelism));
  samples.insert(samples.end(), centers.begin(), centers.end());

  std::vector<Candidate> unique;
  std::unordered_set<std::string> seen;
  for (auto& c : samples) {
    if (seen.insert(c.prompt.text()).second) unique.push_back(std::move(c));
  }
  return unique;
}

std::vector<Candidate> best_subset(const std::vector<Candidate>& scored, int m) {
  std::vector<Candidate> sorted = scored;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) {
    return a.score.value_or(-1.0) > b.score.value_or(-1.0);
  });
  if (m >= 0 && static_cast<std::size_t>(m) < sorted.size()) {
    sorted.erase(sorted.begin() + m, sorted.end());
  }
  return sorted;
}

ExplanationRecord cell_budget_search(const PromptText& x0, Generator& generator,
                                     Infiller& infiller, const ContrastMetric& metric,
                                     const SearchConfig& config, const SearchOptions& options) {
  config.validate();
  if (config.anchor && *config.anchor != Anchor::kOriginal) {
    throw Error(ErrorKind::kInvalidArgument, "the budgeted search scores against the original prompt only");
  }
  const Clock clock = options.clock ? options.clock : steady_clock_ms();
  const std::int64_t started = clock();

  const SpanSplit split = split_tokens(x0, config.split_k);
  const int n_e = split.size();
  IndexSet eligible = IndexSet::range(n_e);
  if (options.eligible) eligible = eligible.intersect(*options.eligible);
  const IndexSet& unmasked = eligible;

  BudgetLedger ledger(config.budget, config.budget_mode);
  ExplanationRecord record = make_record(options, x0, {}, config, Algorithm::kBudget);
  record.metric = metric.id();
  Rng rng(config.seed);
  int requests = 1;
  std::optional<BestTracker> best;
  // Highest-scored candidate so far, first one on ties. Unlike the tracker it
  // also counts scores at the null value, which matters when delta is 0.
  std::optional<Candidate> top;

  auto finish = [&](FoundStatus status) {
    record.found = status;
    if (status == FoundStatus::kThresholdMet) {
      set_contrast(record, split, top->prompt, top->response, *top->score, top->provenance);
    } else if (best) {
      const auto snap = best->snapshot();
      record.score = snap.score;
      if (snap.improved) {
        set_contrast(record, split, snap.prompt, snap.response, snap.score, snap.provenance);
      }
    }
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
    best.emplace(x0, y0, metric.null_value());

    const Candidate root = Candidate::root(x0, n_e);
    std::vector<Candidate> archive;
    std::unordered_set<std::string> archived;
    const int q = samples_per_iteration(config.budget);
    const int inner_iters = std::max(1, ceil_log2(n_e));

    for (int t = 1; t <= config.max_iters; ++t) {
      const int n_c = num_centers(t, config.budget);
      int m = n_c;
      auto centers = generate_centers(m, archive, unmasked, config.alpha, root, split, infiller,
                                      rng, eligible, config.parallelism);

      for (int inner = 1; inner <= inner_iters && !centers.empty(); ++inner) {
        const int n_s = q / (m * ceil_log2(std::max(n_c, 2)));
        if (options.trace) options.trace->schedule.push_back({q, t, n_c, m, n_s, inner});

        auto samples = sample_centers(centers, split, n_s, infiller, rng, eligible,
                                      config.parallelism);
        const auto outcome = session.score(samples, x0, y0);
        requests = session.requests();

        std::vector<Candidate> round;
        for (std::size_t i = 0; i < outcome.scored; ++i) {
          const Candidate& c = samples[i];
          best->offer(c);
          if (!top || *c.score > *top->score) top = c;
          if (options.trace) {
            const int j = c.provenance.empty() ? 0 : c.provenance.back().span_index;
            options.trace->events.push_back(
                {t, inner, j, c.prompt.text(), c.response, c.score, false});
          }
          if (archived.insert(c.prompt.text()).second) archive.push_back(c);
          round.push_back(c);
        }

        const bool met = top && *top->score >= config.delta;
        if (outcome.budget_hit) {
          return finish(met ? FoundStatus::kThresholdMet : FoundStatus::kBudgetExhausted);
        }
        if (met) return finish(FoundStatus::kThresholdMet);

        m = (m + 1) / 2;
        centers = best_subset(round, m);
      }
    }
    return finish(FoundStatus::kSearchExhausted);
  } catch (const Error& e) {
    if (!is_client_error(e.kind())) throw;
    record.error = e.what();
    return finish(FoundStatus::kError);
  }
}

}  // namespace cell
