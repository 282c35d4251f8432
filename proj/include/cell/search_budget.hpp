#pragma once

// Query-budgeted contrastive search with an explore/exploit center schedule.
//
// Each outer iteration t picks a number of centers, generates them partly
// from the original prompt (explore) and partly from archived perturbations
// (exploit), then runs an inner successive-halving loop: sample around the
// centers, score everything, keep the best half as the next centers.
// Logarithms are base 2.

#include <vector>

#include "cell/clients.hpp"
#include "cell/metrics.hpp"
#include "cell/search_common.hpp"
#include "cell/types.hpp"

namespace cell {

// floor(B / log2 B)
int samples_per_iteration(int budget);

// ceil(log2 n) for n >= 1.
int ceil_log2(int n);

/// m = 2^(t+1) when (t+1) * 2^t <= q, else 2^t.
int num_centers(int t, int budget);

/// Returns up to m unscored centers: min(floor(alpha*m), |archive|) children
/// of archived candidates (one fresh span masked in each) followed by
/// single-span children of x0 drawn without replacement from `unmasked`.
/// Archive entries with nothing left to mask are not eligible parents.
/// No-op infills are dropped, so fewer than m centers may come back.
std::vector<Candidate> generate_centers(int m, const std::vector<Candidate>& archive,
                                        const IndexSet& unmasked, double alpha,
                                        const Candidate& root, const SpanSplit& split,
                                        Infiller& infiller, Rng& rng,
                                        const IndexSet& eligible, int parallelism = 1);

/// For every center, up to n_s children masking distinct spans drawn from the
/// center's remaining eligible set; then the centers themselves. Duplicate
/// prompts keep their first occurrence.
std::vector<Candidate> sample_centers(const std::vector<Candidate>& centers,
                                      const SpanSplit& split, int n_s, Infiller& infiller,
                                      Rng& rng, const IndexSet& eligible, int parallelism = 1);

/// Top m candidates by score, descending; ties keep insertion order.
std::vector<Candidate> best_subset(const std::vector<Candidate>& scored, int m);

/// Runs the budgeted search. Generator calls charged to the ledger never
/// exceed config.budget; y0 = LLM(x0) is issued before charging starts.
/// Only the original-prompt anchor is supported.
ExplanationRecord cell_budget_search(const PromptText& x0, Generator& generator,
                                     Infiller& infiller, const ContrastMetric& metric,
                                     const SearchConfig& config,
                                     const SearchOptions& options = {});

}  // namespace cell
