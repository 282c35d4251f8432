#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "cell/clients.hpp"
#include "cell/types.hpp"

namespace cell {

/// Contrast metric f(x0, xc, y0, yc) with values in [0,1]; larger means a
/// stronger contrast between the responses.
class ContrastMetric {
 public:
  virtual ~ContrastMetric() = default;

  virtual MetricId id() const = 0;
  virtual double score(const PromptText& x0, const PromptText& xc, std::string_view y0,
                       std::string_view yc) const = 0;
  // Value of score(x0, x0, y0, y0).
  virtual double null_value() const = 0;
};

double default_delta(MetricId id);

/// max over both orderings of P(contradiction) between y0 and yc.
std::unique_ptr<ContrastMetric> contradiction_metric(std::shared_ptr<NliScorer> nli);

/// P(y0 preferred over yc | x0). Identical responses score exactly 0.5
/// without a scorer call.
std::unique_ptr<ContrastMetric> preference_metric(std::shared_ptr<PreferenceScorer> preference);

/// w_resp * (1 - bleu(y0, yc)) + w_prompt * bleu(x0, xc). Throws
/// Error(kInvalidArgument) unless both weights are non-negative and sum to 1.
std::unique_ptr<ContrastMetric> bleu_composite_metric(double w_resp = 0.75,
                                                      double w_prompt = 0.25);

enum class JudgeDirection { kIncreaseViolation, kDecreaseViolation };

std::string_view to_string(JudgeDirection direction);
JudgeDirection parse_judge_direction(std::string_view name);

/// Averages `repeats` rubric scores for each response and maps the change to
/// clamp(0.5 + (avg(yc) - avg(y0)) / 2) (sign flipped for decrease).
std::unique_ptr<ContrastMetric> rubric_judge_metric(std::shared_ptr<JudgeScorer> judge,
                                                    std::string rubric, int repeats,
                                                    JudgeDirection direction);

// Conversation shown to the judge: the prompt followed by the reply.
std::string judge_conversation(const PromptText& prompt, std::string_view response);

/// Normalized word-level edit distance, for reporting.
double report_distance(const PromptText& x0, const PromptText& xc);

}  // namespace cell
