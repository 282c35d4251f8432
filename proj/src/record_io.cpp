#include "cell/record_io.hpp"

#include "cell/error.hpp"

namespace cell {

using nlohmann::json;

namespace {

json optional_text(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::kMalformedResponse, std::string("record is missing '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kMalformedResponse, std::string("record field '") + key + "' has the wrong type");
  }
}

std::optional<std::string> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<std::string>(j, key);
}

}  // namespace

json config_to_json(const SearchConfig& c) {
  return {
      {"delta", c.delta},
      {"budget", c.budget},
      {"max_iters", c.max_iters},
      {"alpha", c.alpha},
      {"split_k", c.split_k},
      {"seed", c.seed},
      {"metric", std::string(to_string(c.metric))},
      {"anchor", c.anchor ? json(std::string(to_string(*c.anchor))) : json(nullptr)},
      {"budget_mode", std::string(to_string(c.budget_mode))},
      {"parallelism", c.parallelism},
  };
}

SearchConfig config_from_json(const json& j) {
  SearchConfig c;
  c.delta = field<double>(j, "delta");
  c.budget = field<int>(j, "budget");
  c.max_iters = field<int>(j, "max_iters");
  c.alpha = field<double>(j, "alpha");
  c.split_k = field<int>(j, "split_k");
  c.seed = field<std::uint64_t>(j, "seed");
  c.metric = parse_metric(field<std::string>(j, "metric"));
  if (auto a = optional_field(j, "anchor")) c.anchor = parse_anchor(*a);
  c.budget_mode = parse_budget_mode(field<std::string>(j, "budget_mode"));
  c.parallelism = field<int>(j, "parallelism");
  return c;
}

json record_to_json(const ExplanationRecord& r) {
  json mods = json::array();
  for (const auto& m : r.modifications) {
    mods.push_back({{"span_index", m.span_index},
                    {"original", m.original_text},
                    {"replacement", m.replacement_text}});
  }
  return {
      {"id", r.id},
      {"input_prompt", r.input_prompt.text()},
      {"input_response", r.input_response},
      {"contrast_prompt", r.contrast_prompt ? json(r.contrast_prompt->text()) : json(nullptr)},
      {"contrast_response", optional_text(r.contrast_response)},
      {"score", r.score},
      {"found", std::string(to_string(r.found))},
      {"modifications", mods},
      {"generator_calls", r.generator_calls},
      {"generator_requests", r.generator_requests},
      {"cache_hits", r.cache_hits},
      {"elapsed_ms", r.elapsed_ms},
      {"edit_distance", r.edit_distance},
      {"metric_id", std::string(to_string(r.metric))},
      {"algorithm", std::string(to_string(r.algorithm))},
      {"config", config_to_json(r.config)},
      {"error", optional_text(r.error)},
  };
}

ExplanationRecord record_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kMalformedResponse, "record must be a JSON object");
  ExplanationRecord r{.id = field<std::string>(j, "id"),
                      .input_prompt = normalize_prompt(field<std::string>(j, "input_prompt"))};
  r.input_response = field<std::string>(j, "input_response");
  if (auto p = optional_field(j, "contrast_prompt")) r.contrast_prompt = normalize_prompt(*p);
  r.contrast_response = optional_field(j, "contrast_response");
  r.score = field<double>(j, "score");
  r.found = parse_found(field<std::string>(j, "found"));
  for (const auto& m : field<json>(j, "modifications")) {
    r.modifications.push_back({field<int>(m, "span_index"), field<std::string>(m, "original"),
                               field<std::string>(m, "replacement")});
  }
  r.generator_calls = field<int>(j, "generator_calls");
  r.generator_requests = field<int>(j, "generator_requests");
  r.cache_hits = field<int>(j, "cache_hits");
  r.elapsed_ms = field<std::int64_t>(j, "elapsed_ms");
  r.edit_distance = field<double>(j, "edit_distance");
  r.metric = parse_metric(field<std::string>(j, "metric_id"));
  r.algorithm = parse_algorithm(field<std::string>(j, "algorithm"));
  r.config = config_from_json(field<json>(j, "config"));
  r.error = optional_field(j, "error");
  return r;
}

json diagnostic_row(const std::string& id, int line, const std::string& message) {
  return {{"id", id}, {"line", line}, {"found", "error"}, {"error", message}};
}

std::string to_jsonl_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n"; }

}  // namespace cell
