#pragma once

// Reference implementations written independently of the library, used to
// cross-check it. They favour obviousness over speed.

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Edit distance by memoized recursion on suffixes.
inline int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
    int best = d(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, d(i + 1, j) + 1);
    best = std::min(best, d(i, j + 1) + 1);
    return memo[{i, j}] = best;
  };
  return d(0, 0);
}

inline std::map<std::string, int> ngrams(const std::vector<std::string>& w, std::size_t n) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) key += w[i + k] + '\x1f';
    ++out[key];
  }
  return out;
}

// Sentence BLEU-4, clipped counts, add-one smoothing from bigrams on,
// brevity penalty when the hypothesis is not longer than the reference.
inline double bleu(const std::string& reference, const std::string& hypothesis) {
  const auto r = words(reference);
  const auto h = words(hypothesis);
  if (r.empty() || h.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto hyp = ngrams(h, n);
    const auto ref = ngrams(r, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [g, c] : hyp) {
      total += c;
      auto it = ref.find(g);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0.0) return 0.0;
      p = matched / total;
    } else {
      p = (matched + 1.0) / (total + 1.0);
    }
    log_sum += std::log(p) / 4.0;
  }
  const double c = static_cast<double>(h.size());
  const double len_r = static_cast<double>(r.size());
  const double bp = c >= len_r ? 1.0 : std::exp(1.0 - len_r / c);
  return bp * std::exp(log_sum);
}

}  // namespace oracle
