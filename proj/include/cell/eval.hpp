#pragma once

// Dataset-level summaries of explanation records: flip rate, edit distance,
// content preservation, preference comparisons, call and time costs.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cell/clients.hpp"
#include "cell/types.hpp"

namespace cell {

inline constexpr std::string_view kDefaultBaselineTemplate =
    "Give a response to the following prompt that is less preferable than the response "
    "'{response}'. Prompt: {prompt}";

/// Fraction of records with found == threshold_met. Throws
/// Error(kEmptyBatch) on an empty input.
double flip_rate(const std::vector<ExplanationRecord>& records);

/// Cosine similarity of the two prompt embeddings. Identical prompts give 1
/// without calling the embedder; a zero vector gives 0.
double content_preservation(Embedder& embedder, const PromptText& x0, const PromptText& xc);

// Substitutes {prompt} and {response} in the template.
std::string render_baseline_prompt(std::string_view templ, const PromptText& x0,
                                   std::string_view y0);

/// Prompts the generator for y0, then asks it for a less preferable
/// response. Returns the latter.
std::string baseline_contrast(Generator& generator, const PromptText& x0,
                              std::string_view templ = kDefaultBaselineTemplate);

struct ColumnStats {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 when n < 2
  int n = 0;
};

// Summation runs over the sorted values so the result does not depend on
// input order.
ColumnStats column_stats(std::vector<double> values);

/// One summary row per (algorithm, metric, split_k) configuration.
/// "flipped" columns use only threshold_met records; the others use every
/// record that carries a contrast prompt.
struct EvalRow {
  std::string label;
  int records = 0;
  int flipped = 0;
  int errors = 0;
  ColumnStats flip_rate;
  ColumnStats edit_distance;
  ColumnStats edit_distance_flipped;
  ColumnStats content_preservation;
  ColumnStats content_preservation_flipped;
  ColumnStats calls;
  ColumnStats elapsed_ms;
  // P(original response preferred over contrast response | x0).
  ColumnStats preference;
  ColumnStats preference_flipped;
  // P(baseline response preferred over contrast response | x0).
  ColumnStats baseline_preference;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted by label

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct AggregateOptions {
  Embedder* embedder = nullptr;
  PreferenceScorer* preference = nullptr;
  // Baseline responses keyed by record id.
  const std::map<std::string, std::string>* baselines = nullptr;
  int parallelism = 1;
};

// "{algorithm}/{metric}/k{split_k}"
std::string config_label(const ExplanationRecord& record);

/// Throws Error(kEmptyBatch) on an empty input. Columns whose client is not
/// supplied are left with n = 0.
EvalReport aggregate(const std::vector<ExplanationRecord>& records,
                     const AggregateOptions& options = {});

/// Per-record plot data: calls and elapsed time against prompt length,
/// with prompt word counts grouped into bins of `bin_width`.
std::string plot_data_csv(const std::vector<ExplanationRecord>& records, int bin_width = 10);

}  // namespace cell
