#include "cell/http_clients.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "cell/error.hpp"

namespace cell {

using nlohmann::json;

HttpEndpoint::HttpEndpoint(EndpointConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw Error(ErrorKind::kAuth,
                  "environment variable " + config_.auth_env + " is not set");
    }
    token_ = token;
  }
}

json HttpEndpoint::call(const json& body) const {
  HttpRequest request;
  request.url = config_.url;
  request.body = body.dump();
  request.headers.emplace_back("Content-Type", "application/json");
  if (!token_.empty()) request.headers.emplace_back("Authorization", "Bearer " + token_);

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long>(config_.backoff_ms) << (attempt - 1)));
    }
    HttpResponse response;
    try {
      response = transport_->post(request);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNetwork) throw;
      last_failure = e.what();
      continue;
    }
    if (response.status == 401 || response.status == 403) {
      throw Error(ErrorKind::kAuth, config_.url + " rejected credentials (HTTP " +
                                        std::to_string(response.status) + ")");
    }
    if (response.status == 429 || response.status >= 500) {
      last_failure = "HTTP " + std::to_string(response.status);
      continue;
    }
    if (response.status < 200 || response.status >= 300) {
      throw Error(ErrorKind::kNetwork,
                  config_.url + " returned HTTP " + std::to_string(response.status));
    }
    auto parsed = json::parse(response.body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      throw Error(ErrorKind::kMalformedResponse, config_.url + " returned invalid JSON");
    }
    return parsed;
  }
  throw Error(ErrorKind::kNetwork, config_.url + " failed after " +
                                       std::to_string(config_.max_retries + 1) +
                                       " attempts: " + last_failure);
}

json chat_request(const EndpointConfig& config, const std::string& system,
                  const std::string& user) {
  json body = config.params.is_object() ? config.params : json::object();
  body["model"] = config.model;
  json messages = json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  body["messages"] = std::move(messages);
  return body;
}

std::string chat_content(const json& response) {
  try {
    const auto& choice = response.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedResponse, std::string("chat response: ") + e.what());
  }
}

double parse_first_number(std::string_view text) {
  static const std::regex kNumber(R"([-+]?(?:\d+\.?\d*|\.\d+))");
  std::match_results<std::string_view::const_iterator> match;
  if (!std::regex_search(text.begin(), text.end(), match, kNumber)) {
    throw Error(ErrorKind::kMalformedResponse, "no number in judge reply");
  }
  return std::stod(match.str());
}

namespace {

template <typename T>
T field(const json& response, const char* name) {
  try {
    return response.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedResponse, std::string(name) + ": " + e.what());
  }
}

double probability(const json& response, const char* name) {
  const double p = field<double>(response, name);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kMalformedResponse, std::string(name) + " outside [0,1]");
  }
  return p;
}

}  // namespace

HttpGenerator::HttpGenerator(EndpointConfig config, std::shared_ptr<Transport> transport)
    : endpoint_([&] {
        if (!config.params.contains("temperature")) config.params["temperature"] = 0;
        if (!config.params.contains("max_tokens")) config.params["max_tokens"] = 256;
        return std::move(config);
      }(),
                std::move(transport)) {}

std::string HttpGenerator::generate(const PromptText& prompt) {
  return chat_content(endpoint_.call(chat_request(endpoint_.config(), "", prompt.text())));
}

HttpInfiller::HttpInfiller(EndpointConfig config, std::shared_ptr<Transport> transport)
    : endpoint_(std::move(config), std::move(transport)) {}

std::string HttpInfiller::infill(const MaskedPrompt& masked) {
  const auto& cfg = endpoint_.config();
  std::string text = masked.text;
  if (cfg.mask_token != kMaskToken) {
    text = join_words({masked.prefix, cfg.mask_token, masked.suffix});
  }
  json body = cfg.params.is_object() ? cfg.params : json::object();
  body["model"] = cfg.model;
  body["text"] = text;
  body["mask_token"] = cfg.mask_token;
  body["original"] = masked.original_text;
  return field<std::string>(endpoint_.call(body), "text");
}

HttpNliScorer::HttpNliScorer(EndpointConfig config, std::shared_ptr<Transport> transport)
    : endpoint_(std::move(config), std::move(transport)) {}

NliProbabilities HttpNliScorer::classify(std::string_view premise, std::string_view hypothesis) {
  json body = {{"model", endpoint_.config().model},
               {"premise", std::string(premise)},
               {"hypothesis", std::string(hypothesis)}};
  const json response = endpoint_.call(body);
  NliProbabilities probs{probability(response, "entailment"), probability(response, "neutral"),
                         probability(response, "contradiction")};
  validate(probs);
  return probs;
}

HttpPreferenceScorer::HttpPreferenceScorer(EndpointConfig config,
                                           std::shared_ptr<Transport> transport)
    : endpoint_(std::move(config), std::move(transport)) {}

double HttpPreferenceScorer::prefer(std::string_view context, std::string_view response_a,
                                    std::string_view response_b) {
  json body = {{"model", endpoint_.config().model},
               {"context", std::string(context)},
               {"response_a", std::string(response_a)},
               {"response_b", std::string(response_b)}};
  return probability(endpoint_.call(body), "preference");
}

HttpJudgeScorer::HttpJudgeScorer(EndpointConfig config, std::shared_ptr<Transport> transport)
    : endpoint_(std::move(config), std::move(transport)) {}

double HttpJudgeScorer::judge(std::string_view conversation, std::string_view rubric,
                              int sample_index) {
  const auto& cfg = endpoint_.config();
  json body = chat_request(cfg, std::string(rubric),
                           "Conversation:\n" + std::string(conversation) +
                               "\n\nReply with the numeric score only.");
  body["seed"] = sample_index;
  const double raw = parse_first_number(chat_content(endpoint_.call(body)));
  const double scale = cfg.score_scale > 0.0 ? cfg.score_scale : 1.0;
  return std::clamp(raw / scale, 0.0, 1.0);
}

HttpEmbedder::HttpEmbedder(EndpointConfig config, std::shared_ptr<Transport> transport)
    : endpoint_(std::move(config), std::move(transport)) {}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
  json body = {{"model", endpoint_.config().model}, {"input", std::string(text)}};
  const json response = endpoint_.call(body);
  try {
    if (response.contains("embedding")) return response.at("embedding").get<std::vector<double>>();
    return response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedResponse, std::string("embedding: ") + e.what());
  }
}

}  // namespace cell
