#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cell/types.hpp"

namespace cell {

/// Groups words left to right into spans of `split_k`; the last span holds
/// the remainder.
SpanSplit split_tokens(const PromptText& prompt, int split_k);

/// A prompt with one span replaced by the mask token. `prefix` and `suffix`
/// are the surrounding text; `original_text` is the untouched span Z[j].
struct MaskedPrompt {
  std::string text;
  int masked_index = 0;
  std::string prefix;
  std::string suffix;
  std::string original_text;
};

// Current surface text of every span: the replacement for perturbed spans,
// Z[j] otherwise. Empty strings mark deleted spans.
std::vector<std::string> current_spans(const SpanSplit& split,
                                       const std::vector<ModificationRecord>& provenance);

/// Masks span `j` of the candidate. Throws Error(kIndexNotRemaining) when
/// `j` was already perturbed.
MaskedPrompt mask(const SpanSplit& split, const Candidate& candidate, int j);

// Recovers the text an infiller put in place of the mask by stripping the
// longest matching prefix/suffix words.
std::string extract_replacement(const MaskedPrompt& masked, std::string_view filled);

struct EditDistance {
  int raw = 0;
  double normalized = 0.0;
};

int word_levenshtein(std::span<const std::string> a, std::span<const std::string> b);

// Normalized by the word count of `a`.
EditDistance word_levenshtein(const PromptText& a, const PromptText& b);

/// Sentence BLEU over whitespace words: n-grams up to 4, clipped precisions,
/// add-one smoothing for n >= 2 and the usual brevity penalty. Empty input
/// scores 0.
double bleu(std::string_view reference, std::string_view hypothesis);

/// (original, replacement) pairs ordered by span index. Throws
/// Error(kDuplicateSpan) when a span appears twice.
std::vector<std::pair<std::string, std::string>> diff_modifications(
    const SpanSplit& split, const std::vector<ModificationRecord>& provenance);

// "a → b, c → d"
std::string render_modifications(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace cell
