#pragma once

#include "cell/clients.hpp"
#include "cell/metrics.hpp"
#include "cell/search_common.hpp"
#include "cell/types.hpp"

namespace cell {

/// Greedy contrastive search.
///
/// Each pass masks and infills every remaining span of the current prompt,
/// scores the responses, and either returns the best perturbation (when it
/// reaches delta) or adopts it as the new current prompt and drops its span.
/// Ties go to the smallest span index. The budget in `config` is not
/// enforced; the worst case is n_e + n_e + (n_e - 1) + ... + 1 calls.
///
/// Infills that leave the prompt unchanged are not scored and keep their
/// span; a span that yields n_e such no-ops in a row is dropped so the
/// search terminates.
ExplanationRecord cell_search(const PromptText& x0, Generator& generator, Infiller& infiller,
                              const ContrastMetric& metric, const SearchConfig& config,
                              const SearchOptions& options = {});

}  // namespace cell
