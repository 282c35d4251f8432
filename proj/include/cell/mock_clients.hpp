#pragma once

// Deterministic in-process clients. Each one is a pure function of its
// inputs and seed, so results do not depend on call order or threading.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cell/clients.hpp"
#include "cell/transport.hpp"

namespace cell {

// Stable 64-bit FNV-1a; used wherever mocks need a seeded choice.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

struct GeneratorRule {
  std::vector<std::string> contains;  // every substring must be present
  std::vector<std::string> absent;    // none may be present
  std::string response;               // "{prompt}" expands to the prompt
};

/// First matching rule wins; otherwise the default response.
class MockGenerator : public Generator {
 public:
  MockGenerator(std::vector<GeneratorRule> rules, std::string default_response,
                std::uint64_t seed = 0, std::string name = "mock-generator");

  std::string generate(const PromptText& prompt) override;
  std::string identity() const override { return name_; }

  std::vector<std::string> received() const;
  long calls() const;

 private:
  std::vector<GeneratorRule> rules_;
  std::string default_response_;
  std::uint64_t seed_;
  std::string name_;
  mutable std::mutex mu_;
  std::vector<std::string> received_;
};

/// Looks up the masked span's original text; picks one replacement by a
/// seeded hash of the masked prompt. Without an entry the span is deleted.
class MockInfiller : public Infiller {
 public:
  MockInfiller(std::map<std::string, std::vector<std::string>> table, std::uint64_t seed = 0);

  std::string infill(const MaskedPrompt& masked) override;
  std::string identity() const override { return "mock-infiller"; }
  long calls() const;

 private:
  std::map<std::string, std::vector<std::string>> table_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  long calls_ = 0;
};

struct NliRule {
  std::string premise_contains;
  std::string hypothesis_contains;
  NliProbabilities probs;
};

/// Rules are checked in order; otherwise identical texts entail and
/// different texts get `different`.
class MockNliScorer : public NliScorer {
 public:
  explicit MockNliScorer(std::vector<NliRule> rules = {},
                         NliProbabilities different = {0.0, 1.0, 0.0},
                         NliProbabilities identical = {1.0, 0.0, 0.0});

  NliProbabilities classify(std::string_view premise, std::string_view hypothesis) override;

 private:
  std::vector<NliRule> rules_;
  NliProbabilities different_;
  NliProbabilities identical_;
};

/// P(a over b) = q(a) / (q(a) + q(b)), where q is the value of the first
/// quality rule whose substring occurs in the response (default 1). A fixed
/// probability, when set, overrides the ratio.
class MockPreferenceScorer : public PreferenceScorer {
 public:
  explicit MockPreferenceScorer(std::vector<std::pair<std::string, double>> quality = {},
                                double default_quality = 1.0,
                                std::optional<double> fixed = std::nullopt);

  double prefer(std::string_view context, std::string_view response_a,
                std::string_view response_b) override;

 private:
  double quality(std::string_view response) const;

  std::vector<std::pair<std::string, double>> quality_;
  double default_quality_;
  std::optional<double> fixed_;
};

struct JudgeRule {
  std::string contains;
  std::vector<double> scores;  // indexed by sample_index modulo size
};

class MockJudgeScorer : public JudgeScorer {
 public:
  explicit MockJudgeScorer(std::vector<JudgeRule> rules = {},
                           std::vector<double> default_scores = {0.5});

  double judge(std::string_view conversation, std::string_view rubric, int sample_index) override;
  long calls() const;

 private:
  std::vector<JudgeRule> rules_;
  std::vector<double> default_scores_;
  mutable std::mutex mu_;
  long calls_ = 0;
};

/// Signed feature hashing of lowercase words into `dim` buckets, unless the
/// text has an explicit override vector.
class MockEmbedder : public Embedder {
 public:
  explicit MockEmbedder(int dim = 64, std::map<std::string, std::vector<double>> overrides = {});

  std::vector<double> embed(std::string_view text) override;

 private:
  int dim_;
  std::map<std::string, std::vector<double>> overrides_;
};

// Handlers that speak the HTTP wire formats of http_clients.hpp on top of a
// local client, for use with MockTransport.
MockTransport::Handler serve_generator(std::shared_ptr<Generator> generator);
MockTransport::Handler serve_infiller(std::shared_ptr<Infiller> infiller);
MockTransport::Handler serve_nli(std::shared_ptr<NliScorer> nli);
MockTransport::Handler serve_preference(std::shared_ptr<PreferenceScorer> preference);
MockTransport::Handler serve_judge(std::shared_ptr<JudgeScorer> judge);
MockTransport::Handler serve_embedder(std::shared_ptr<Embedder> embedder);

}  // namespace cell
