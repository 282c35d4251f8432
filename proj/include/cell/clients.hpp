#pragma once

// Service interfaces used by the searches and metrics. Implementations must
// be safe to call from several scoring workers at once.

#include <string>
#include <string_view>
#include <vector>

#include "cell/text_ops.hpp"
#include "cell/types.hpp"

namespace cell {

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const PromptText& prompt) = 0;
  virtual std::string identity() const = 0;
};

class Infiller {
 public:
  virtual ~Infiller() = default;
  // Returns the full prompt with the mask replaced by zero or more words.
  virtual std::string infill(const MaskedPrompt& masked) = 0;
  virtual std::string identity() const = 0;
};

struct NliProbabilities {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;
};

// Throws Error(kMalformedResponse) unless every entry is in [0,1] and the
// sum is 1 within 1e-6.
void validate(const NliProbabilities& probs);

class NliScorer {
 public:
  virtual ~NliScorer() = default;
  virtual NliProbabilities classify(std::string_view premise, std::string_view hypothesis) = 0;
};

class PreferenceScorer {
 public:
  virtual ~PreferenceScorer() = default;
  // P(response_a is preferred over response_b | context).
  virtual double prefer(std::string_view context, std::string_view response_a,
                        std::string_view response_b) = 0;
};

class JudgeScorer {
 public:
  virtual ~JudgeScorer() = default;
  // Rubric score in [0,1]. `sample_index` distinguishes repeated queries of
  // the same conversation so they are not collapsed by caching.
  virtual double judge(std::string_view conversation, std::string_view rubric,
                       int sample_index) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Prepends a fixed directive to every prompt before forwarding.
class PrefixedGenerator : public Generator {
 public:
  PrefixedGenerator(Generator& inner, std::string directive)
      : inner_(inner), directive_(std::move(directive)) {}

  std::string generate(const PromptText& prompt) override;
  std::string identity() const override { return inner_.identity(); }

 private:
  Generator& inner_;
  std::string directive_;
};

}  // namespace cell
