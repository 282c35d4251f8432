#include "cell/text_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "cell/error.hpp"

namespace cell {

SpanSplit split_tokens(const PromptText& prompt, int split_k) {
  if (split_k < 1) throw Error(ErrorKind::kInvalidArgument, "split_k must be positive");
  const auto words = prompt.words();
  SpanSplit split;
  split.split_k = split_k;
  for (std::size_t i = 0; i < words.size(); i += static_cast<std::size_t>(split_k)) {
    const auto end = std::min(words.size(), i + static_cast<std::size_t>(split_k));
    split.spans.push_back(
        join_words(std::vector<std::string>(words.begin() + static_cast<long>(i),
                                            words.begin() + static_cast<long>(end))));
  }
  return split;
}

std::vector<std::string> current_spans(const SpanSplit& split,
                                       const std::vector<ModificationRecord>& provenance) {
  std::vector<std::string> spans = split.spans;
  for (const auto& mod : provenance) {
    if (mod.span_index < 1 || mod.span_index > split.size()) {
      throw Error(ErrorKind::kInvalidArgument, "provenance index out of range");
    }
    spans[static_cast<std::size_t>(mod.span_index - 1)] = mod.replacement_text;
  }
  return spans;
}

MaskedPrompt mask(const SpanSplit& split, const Candidate& candidate, int j) {
  if (!candidate.remaining.contains(j)) {
    throw Error(ErrorKind::kIndexNotRemaining,
                "span " + std::to_string(j) + " is not among the remaining indices");
  }
  const auto spans = current_spans(split, candidate.provenance);
  std::vector<std::string> before(spans.begin(), spans.begin() + (j - 1));
  std::vector<std::string> after(spans.begin() + j, spans.end());

  MaskedPrompt masked;
  masked.masked_index = j;
  masked.prefix = join_words(before);
  masked.suffix = join_words(after);
  masked.original_text = split.span(j);
  masked.text = join_words({masked.prefix, std::string(kMaskToken), masked.suffix});
  return masked;
}

std::string extract_replacement(const MaskedPrompt& masked, std::string_view filled) {
  const auto words = split_words(filled);
  const auto prefix = split_words(masked.prefix);
  const auto suffix = split_words(masked.suffix);

  std::size_t lp = 0;
  while (lp < prefix.size() && lp < words.size() && words[lp] == prefix[lp]) ++lp;
  std::size_t ls = 0;
  while (ls < suffix.size() && lp + ls < words.size() &&
         words[words.size() - 1 - ls] == suffix[suffix.size() - 1 - ls]) {
    ++ls;
  }
  return join_words(std::vector<std::string>(words.begin() + static_cast<long>(lp),
                                             words.end() - static_cast<long>(ls)));
}

int word_levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  // Single rolling row over b.
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      const int cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

EditDistance word_levenshtein(const PromptText& a, const PromptText& b) {
  const auto wa = a.words();
  const auto wb = b.words();
  EditDistance d;
  d.raw = word_levenshtein(wa, wb);
  d.normalized = static_cast<double>(d.raw) / static_cast<double>(wa.size());
  return d;
}

namespace {

constexpr int kMaxOrder = 4;

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& words,
                                                     std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++counts[std::vector<std::string>(words.begin() + static_cast<long>(i),
                                      words.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  const auto hyp = split_words(hypothesis);
  if (ref.empty() || hyp.empty()) return 0.0;

  double log_precision = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const auto hyp_counts = ngram_counts(hyp, static_cast<std::size_t>(n));
    const auto ref_counts = ngram_counts(ref, static_cast<std::size_t>(n));
    double matches = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        matches += std::min(count, it->second);
      }
    }
    const double smoothing = n >= 2 ? 1.0 : 0.0;
    if (matches + smoothing == 0.0) return 0.0;
    log_precision += std::log((matches + smoothing) / (total + smoothing));
  }
  log_precision /= kMaxOrder;

  const double c = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  const double log_bp = c > r ? 0.0 : 1.0 - r / c;
  return std::clamp(std::exp(log_precision + log_bp), 0.0, 1.0);
}

std::vector<std::pair<std::string, std::string>> diff_modifications(
    const SpanSplit& split, const std::vector<ModificationRecord>& provenance) {
  std::vector<ModificationRecord> sorted = provenance;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.span_index < b.span_index; });
  std::vector<std::pair<std::string, std::string>> pairs;
  std::set<int> seen;
  for (const auto& mod : sorted) {
    if (!seen.insert(mod.span_index).second) {
      throw Error(ErrorKind::kDuplicateSpan,
                  "span " + std::to_string(mod.span_index) + " modified twice");
    }
    if (mod.original_text != split.span(mod.span_index)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "modification original text does not match span " +
                      std::to_string(mod.span_index));
    }
    pairs.emplace_back(mod.original_text, mod.replacement_text);
  }
  return pairs;
}

std::string render_modifications(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::string out;
  for (const auto& [from, to] : pairs) {
    if (!out.empty()) out += ", ";
    out += from + " → " + to;
  }
  return out;
}

}  // namespace cell
