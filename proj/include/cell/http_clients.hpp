#pragma once

// HTTP implementations of the service interfaces. Wire formats:
//
//   generator   POST {"model", "messages":[{"role":"user","content"}], params...}
//               <- {"choices":[{"message":{"content"}}]}
//   infiller    POST {"model", "text", "mask_token", "original", params...}
//               <- {"text"}; "original" is the span under the mask
//   nli         POST {"model", "premise", "hypothesis"}
//               <- {"entailment", "neutral", "contradiction"}
//   preference  POST {"model", "context", "response_a", "response_b"}
//               <- {"preference"}
//   judge       chat request as for the generator, with the rubric as the
//               system message and "seed" set to the sample index; the first
//               number in the reply is divided by score_scale
//   embedder    POST {"model", "input"} <- {"embedding":[...]} or
//               {"data":[{"embedding":[...]}]}

#include <memory>
#include <string>

#include "json.hpp"

#include "cell/clients.hpp"
#include "cell/transport.hpp"

namespace cell {

struct EndpointConfig {
  std::string url;
  std::string model;
  std::string auth_env;  // empty: no Authorization header
  nlohmann::json params = nlohmann::json::object();
  int max_retries = 3;
  int backoff_ms = 500;
  int timeout_s = 120;
  std::string mask_token = std::string(kMaskToken);
  double score_scale = 1.0;
};

/// Shared request plumbing: bearer auth, retry with exponential backoff on
/// transport failures, 429 and 5xx, and JSON decoding.
class HttpEndpoint {
 public:
  // Throws Error(kAuth) when auth_env names an unset variable.
  HttpEndpoint(EndpointConfig config, std::shared_ptr<Transport> transport);

  nlohmann::json call(const nlohmann::json& body) const;

  const EndpointConfig& config() const noexcept { return config_; }
  std::string identity() const { return config_.model + "@" + config_.url; }

 private:
  EndpointConfig config_;
  std::shared_ptr<Transport> transport_;
  std::string token_;
};

class HttpGenerator : public Generator {
 public:
  HttpGenerator(EndpointConfig config, std::shared_ptr<Transport> transport);
  std::string generate(const PromptText& prompt) override;
  std::string identity() const override { return endpoint_.identity(); }

 private:
  HttpEndpoint endpoint_;
};

class HttpInfiller : public Infiller {
 public:
  HttpInfiller(EndpointConfig config, std::shared_ptr<Transport> transport);
  std::string infill(const MaskedPrompt& masked) override;
  std::string identity() const override { return endpoint_.identity(); }

 private:
  HttpEndpoint endpoint_;
};

class HttpNliScorer : public NliScorer {
 public:
  HttpNliScorer(EndpointConfig config, std::shared_ptr<Transport> transport);
  NliProbabilities classify(std::string_view premise, std::string_view hypothesis) override;

 private:
  HttpEndpoint endpoint_;
};

class HttpPreferenceScorer : public PreferenceScorer {
 public:
  HttpPreferenceScorer(EndpointConfig config, std::shared_ptr<Transport> transport);
  double prefer(std::string_view context, std::string_view response_a,
                std::string_view response_b) override;

 private:
  HttpEndpoint endpoint_;
};

class HttpJudgeScorer : public JudgeScorer {
 public:
  HttpJudgeScorer(EndpointConfig config, std::shared_ptr<Transport> transport);
  double judge(std::string_view conversation, std::string_view rubric, int sample_index) override;

 private:
  HttpEndpoint endpoint_;
};

class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(EndpointConfig config, std::shared_ptr<Transport> transport);
  std::vector<double> embed(std::string_view text) override;

 private:
  HttpEndpoint endpoint_;
};

// Chat-completion body shared by the generator and judge clients.
nlohmann::json chat_request(const EndpointConfig& config, const std::string& system,
                            const std::string& user);

// Reads choices[0].message.content (or choices[0].text).
std::string chat_content(const nlohmann::json& response);

// First decimal number in `text`; Error(kMalformedResponse) if none.
double parse_first_number(std::string_view text);

}  // namespace cell
