#include "cell/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cell/error.hpp"
#include "cell/text_ops.hpp"

namespace cell {

double default_delta(MetricId id) {
  switch (id) {
    case MetricId::kContradiction:
      return 0.5;
    case MetricId::kPreference:
      return 0.75;
    case MetricId::kBleuComposite:
      return 0.7;
    case MetricId::kRubricJudge:
      return 0.75;
  }
  return 0.5;
}

namespace {

class ContradictionMetric : public ContrastMetric {
 public:
  explicit ContradictionMetric(std::shared_ptr<NliScorer> nli) : nli_(std::move(nli)) {}

  MetricId id() const override { return MetricId::kContradiction; }
  double null_value() const override { return 0.0; }

  double score(const PromptText&, const PromptText&, std::string_view y0,
               std::string_view yc) const override {
    const auto forward = nli_->classify(y0, yc);
    const auto backward = nli_->classify(yc, y0);
    validate(forward);
    validate(backward);
    return std::clamp(std::max(forward.contradiction, backward.contradiction), 0.0, 1.0);
  }

 private:
  std::shared_ptr<NliScorer> nli_;
};

class PreferenceMetric : public ContrastMetric {
 public:
  explicit PreferenceMetric(std::shared_ptr<PreferenceScorer> preference)
      : preference_(std::move(preference)) {}

  MetricId id() const override { return MetricId::kPreference; }
  double null_value() const override { return 0.5; }

  double score(const PromptText& x0, const PromptText&, std::string_view y0,
               std::string_view yc) const override {
    if (y0 == yc) return 0.5;
    const double p = preference_->prefer(x0.text(), y0, yc);
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kMalformedResponse, "preference outside [0,1]");
    }
    return p;
  }

 private:
  std::shared_ptr<PreferenceScorer> preference_;
};

class BleuCompositeMetric : public ContrastMetric {
 public:
  BleuCompositeMetric(double w_resp, double w_prompt) : w_resp_(w_resp), w_prompt_(w_prompt) {}

  MetricId id() const override { return MetricId::kBleuComposite; }
  double null_value() const override { return w_prompt_; }

  double score(const PromptText& x0, const PromptText& xc, std::string_view y0,
               std::string_view yc) const override {
    const double value = w_resp_ * (1.0 - bleu(y0, yc)) + w_prompt_ * bleu(x0.text(), xc.text());
    return std::clamp(value, 0.0, 1.0);
  }

 private:
  double w_resp_;
  double w_prompt_;
};

class RubricJudgeMetric : public ContrastMetric {
 public:
  RubricJudgeMetric(std::shared_ptr<JudgeScorer> judge, std::string rubric, int repeats,
                    JudgeDirection direction)
      : judge_(std::move(judge)),
        rubric_(std::move(rubric)),
        repeats_(repeats),
        direction_(direction) {}

  MetricId id() const override { return MetricId::kRubricJudge; }
  double null_value() const override { return 0.5; }

  double score(const PromptText& x0, const PromptText& xc, std::string_view y0,
               std::string_view yc) const override {
    const double before = average(judge_conversation(x0, y0));
    const double after = average(judge_conversation(xc, yc));
    const double change = direction_ == JudgeDirection::kIncreaseViolation ? after - before
                                                                            : before - after;
    return std::clamp(0.5 + change / 2.0, 0.0, 1.0);
  }

 private:
  double average(const std::string& conversation) const {
    double sum = 0.0;
    for (int i = 0; i < repeats_; ++i) {
      const double s = judge_->judge(conversation, rubric_, i);
      if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorKind::kMalformedResponse, "judge score outside [0,1]");
      }
      sum += s;
    }
    return sum / repeats_;
  }

  std::shared_ptr<JudgeScorer> judge_;
  std::string rubric_;
  int repeats_;
  JudgeDirection direction_;
};

}  // namespace

std::unique_ptr<ContrastMetric> contradiction_metric(std::shared_ptr<NliScorer> nli) {
  if (!nli) throw Error(ErrorKind::kInvalidArgument, "contradiction metric needs an NLI scorer");
  return std::make_unique<ContradictionMetric>(std::move(nli));
}

std::unique_ptr<ContrastMetric> preference_metric(std::shared_ptr<PreferenceScorer> preference) {
  if (!preference) {
    throw Error(ErrorKind::kInvalidArgument, "preference metric needs a preference scorer");
  }
  return std::make_unique<PreferenceMetric>(std::move(preference));
}

std::unique_ptr<ContrastMetric> bleu_composite_metric(double w_resp, double w_prompt) {
  if (w_resp < 0.0 || w_prompt < 0.0 || std::abs(w_resp + w_prompt - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument,
                "bleu composite weights must be non-negative and sum to 1");
  }
  return std::make_unique<BleuCompositeMetric>(w_resp, w_prompt);
}

std::string_view to_string(JudgeDirection direction) {
  return direction == JudgeDirection::kIncreaseViolation ? "increase_violation"
                                                         : "decrease_violation";
}

JudgeDirection parse_judge_direction(std::string_view name) {
  if (name == "increase_violation") return JudgeDirection::kIncreaseViolation;
  if (name == "decrease_violation") return JudgeDirection::kDecreaseViolation;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown judge direction '" + std::string(name) +
                  "' (expected increase_violation or decrease_violation)");
}

std::unique_ptr<ContrastMetric> rubric_judge_metric(std::shared_ptr<JudgeScorer> judge,
                                                    std::string rubric, int repeats,
                                                    JudgeDirection direction) {
  if (!judge) throw Error(ErrorKind::kInvalidArgument, "rubric metric needs a judge");
  if (repeats < 1) throw Error(ErrorKind::kInvalidArgument, "repeats must be at least 1");
  return std::make_unique<RubricJudgeMetric>(std::move(judge), std::move(rubric), repeats,
                                             direction);
}

std::string judge_conversation(const PromptText& prompt, std::string_view response) {
  return prompt.text() + "\nassistant: " + std::string(response);
}

double report_distance(const PromptText& x0, const PromptText& xc) {
  return word_levenshtein(x0, xc).normalized;
}

}  // namespace cell
