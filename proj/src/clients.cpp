#include "cell/clients.hpp"

#include <cmath>

#include "cell/error.hpp"

namespace cell {

void validate(const NliProbabilities& probs) {
  for (double p : {probs.entailment, probs.neutral, probs.contradiction}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kMalformedResponse, "NLI probability outside [0,1]");
    }
  }
  if (std::abs(probs.entailment + probs.neutral + probs.contradiction - 1.0) > 1e-6) {
    throw Error(ErrorKind::kMalformedResponse, "NLI probabilities do not sum to 1");
  }
}

std::string PrefixedGenerator::generate(const PromptText& prompt) {
  return inner_.generate(PromptText::normalize(directive_ + " " + prompt.text()));
}

}  // namespace cell
