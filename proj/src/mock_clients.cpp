#include "cell/mock_clients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "cell/error.hpp"

namespace cell {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = 14695981039346656037ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

namespace {

void replace_all(std::string& text, std::string_view from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

MockGenerator::MockGenerator(std::vector<GeneratorRule> rules, std::string default_response,
                             std::uint64_t seed, std::string name)
    : rules_(std::move(rules)),
      default_response_(std::move(default_response)),
      seed_(seed),
      name_(std::move(name)) {}

std::string MockGenerator::generate(const PromptText& prompt) {
  {
    std::lock_guard lock(mu_);
    received_.push_back(prompt.text());
  }
  const std::string& text = prompt.text();
  std::string response = default_response_;
  for (const auto& rule : rules_) {
    const bool all = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const auto& s) {
      return text.find(s) != std::string::npos;
    });
    const bool none = std::none_of(rule.absent.begin(), rule.absent.end(), [&](const auto& s) {
      return text.find(s) != std::string::npos;
    });
    if (all && none) {
      response = rule.response;
      break;
    }
  }
  char nonce[17];
  std::snprintf(nonce, sizeof(nonce), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text, seed_)));
  replace_all(response, "{prompt}", text);
  replace_all(response, "{nonce}", nonce);
  return response;
}

std::vector<std::string> MockGenerator::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

long MockGenerator::calls() const {
  std::lock_guard lock(mu_);
  return static_cast<long>(received_.size());
}

MockInfiller::MockInfiller(std::map<std::string, std::vector<std::string>> table,
                           std::uint64_t seed)
    : table_(std::move(table)), seed_(seed) {}

std::string MockInfiller::infill(const MaskedPrompt& masked) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  std::string replacement;
  if (auto it = table_.find(masked.original_text); it != table_.end() && !it->second.empty()) {
    const auto pick = fnv1a64(masked.text, seed_) % it->second.size();
    replacement = it->second[pick];
  }
  return join_words({masked.prefix, replacement, masked.suffix});
}

long MockInfiller::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

MockNliScorer::MockNliScorer(std::vector<NliRule> rules, NliProbabilities different,
                             NliProbabilities identical)
    : rules_(std::move(rules)), different_(different), identical_(identical) {
  validate(different_);
  validate(identical_);
  for (const auto& rule : rules_) validate(rule.probs);
}

NliProbabilities MockNliScorer::classify(std::string_view premise, std::string_view hypothesis) {
  for (const auto& rule : rules_) {
    if (premise.find(rule.premise_contains) != std::string_view::npos &&
        hypothesis.find(rule.hypothesis_contains) != std::string_view::npos) {
      return rule.probs;
    }
  }
  return premise == hypothesis ? identical_ : different_;
}

MockPreferenceScorer::MockPreferenceScorer(std::vector<std::pair<std::string, double>> quality,
                                           double default_quality, std::optional<double> fixed)
    : quality_(std::move(quality)), default_quality_(default_quality), fixed_(fixed) {}

double MockPreferenceScorer::quality(std::string_view response) const {
  for (const auto& [needle, value] : quality_) {
    if (response.find(needle) != std::string_view::npos) return value;
  }
  return default_quality_;
}

double MockPreferenceScorer::prefer(std::string_view, std::string_view response_a,
                                    std::string_view response_b) {
  if (fixed_) return *fixed_;
  const double qa = quality(response_a);
  const double qb = quality(response_b);
  if (qa + qb <= 0.0) return 0.5;
  return qa / (qa + qb);
}

MockJudgeScorer::MockJudgeScorer(std::vector<JudgeRule> rules, std::vector<double> default_scores)
    : rules_(std::move(rules)), default_scores_(std::move(default_scores)) {
  if (default_scores_.empty()) default_scores_ = {0.5};
}

double MockJudgeScorer::judge(std::string_view conversation, std::string_view, int sample_index) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  const std::vector<double>* scores = &default_scores_;
  for (const auto& rule : rules_) {
    if (!rule.scores.empty() && conversation.find(rule.contains) != std::string_view::npos) {
      scores = &rule.scores;
      break;
    }
  }
  const auto n = static_cast<int>(scores->size());
  return (*scores)[static_cast<std::size_t>(((sample_index % n) + n) % n)];
}

long MockJudgeScorer::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

MockEmbedder::MockEmbedder(int dim, std::map<std::string, std::vector<double>> overrides)
    : dim_(std::max(dim, 1)), overrides_(std::move(overrides)) {}

std::vector<double> MockEmbedder::embed(std::string_view text) {
  if (auto it = overrides_.find(std::string(text)); it != overrides_.end()) return it->second;
  std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
  for (auto word : split_words(text)) {
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto h = fnv1a64(word);
    v[h % static_cast<std::uint64_t>(dim_)] += (h >> 63) != 0 ? -1.0 : 1.0;
  }
  return v;
}

namespace {

MockTransport::Handler json_handler(std::function<json(const json&)> fn) {
  return [fn = std::move(fn)](const HttpRequest& request) -> HttpResponse {
    auto body = json::parse(request.body, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded()) return HttpResponse{400, R"({"error":"invalid json"})"};
    try {
      return HttpResponse{200, fn(body).dump()};
    } catch (const std::exception& e) {
      return HttpResponse{400, json{{"error", e.what()}}.dump()};
    }
  };
}

std::string last_user_message(const json& body) {
  return body.at("messages").back().at("content").get<std::string>();
}

}  // namespace

MockTransport::Handler serve_generator(std::shared_ptr<Generator> generator) {
  return json_handler([generator](const json& body) {
    const auto prompt = PromptText::normalize(last_user_message(body));
    return json{{"choices",
                 json::array({{{"message",
                                {{"role", "assistant"}, {"content", generator->generate(prompt)}}}}})}};
  });
}

MockTransport::Handler serve_infiller(std::shared_ptr<Infiller> infiller) {
  return json_handler([infiller](const json& body) {
    const auto text = body.at("text").get<std::string>();
    const auto token = body.value("mask_token", std::string(kMaskToken));
    const auto pos = text.find(token);
    if (pos == std::string::npos) throw std::runtime_error("no mask token in request");
    MaskedPrompt masked;
    masked.prefix = join_words(split_words(text.substr(0, pos)));
    masked.suffix = join_words(split_words(text.substr(pos + token.size())));
    masked.text = join_words({masked.prefix, std::string(kMaskToken), masked.suffix});
    masked.original_text = body.value("original", std::string());
    return json{{"text", infiller->infill(masked)}};
  });
}

MockTransport::Handler serve_nli(std::shared_ptr<NliScorer> nli) {
  return json_handler([nli](const json& body) {
    const auto p = nli->classify(body.at("premise").get<std::string>(),
                                 body.at("hypothesis").get<std::string>());
    return json{{"entailment", p.entailment},
                {"neutral", p.neutral},
                {"contradiction", p.contradiction}};
  });
}

MockTransport::Handler serve_preference(std::shared_ptr<PreferenceScorer> preference) {
  return json_handler([preference](const json& body) {
    return json{{"preference", preference->prefer(body.at("context").get<std::string>(),
                                                  body.at("response_a").get<std::string>(),
                                                  body.at("response_b").get<std::string>())}};
  });
}

MockTransport::Handler serve_judge(std::shared_ptr<JudgeScorer> judge) {
  return json_handler([judge](const json& body) {
    std::string rubric;
    for (const auto& m : body.at("messages")) {
      if (m.at("role") == "system") rubric = m.at("content").get<std::string>();
    }
    std::string conversation = last_user_message(body);
    const std::string prefix = "Conversation:\n";
    const std::string suffix = "\n\nReply with the numeric score only.";
    if (conversation.rfind(prefix, 0) == 0) conversation.erase(0, prefix.size());
    if (conversation.size() >= suffix.size() &&
        conversation.compare(conversation.size() - suffix.size(), suffix.size(), suffix) == 0) {
      conversation.erase(conversation.size() - suffix.size());
    }
    const double score = judge->judge(conversation, rubric, body.value("seed", 0));
    return json{{"choices",
                 json::array({{{"message",
                                {{"role", "assistant"}, {"content", std::to_string(score)}}}}})}};
  });
}

MockTransport::Handler serve_embedder(std::shared_ptr<Embedder> embedder) {
  return json_handler([embedder](const json& body) {
    return json{{"embedding", embedder->embed(body.at("input").get<std::string>())}};
  });
}

}  // namespace cell
