#include "cell/runner.hpp"

#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "cell/error.hpp"
#include "cell/mock_clients.hpp"
#include "cell/record_io.hpp"
#include "cell/search_budget.hpp"
#include "cell/search_myopic.hpp"

namespace cell {

using nlohmann::json;

namespace {

constexpr std::pair<std::string_view, Role> kRoleNames[] = {
    {"generator", Role::kGenerator}, {"infiller", Role::kInfiller},
    {"nli", Role::kNli},             {"preference", Role::kPreference},
    {"judge", Role::kJudge},         {"embedder", Role::kEmbedder},
};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::kConfig, msg); }

void check_object(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  check_object(j, where);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) config_error("unknown key '" + key + "' in " + where);
  }
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) config_error(where + "." + key + " must be a string");
  return v.get<std::string>();
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) config_error(where + "." + key + " must be a number");
  return v.get<double>();
}

long long get_integer(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) config_error(where + "." + key + " must be an integer");
  return v.get<long long>();
}

std::vector<std::string> get_strings(const json& j, const std::string& key,
                                     const std::string& where) {
  const auto& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) config_error(where + "." + key + " must be a string or array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) config_error(where + "." + key + " must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) config_error(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) config_error(where + "." + key + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Re-raises parse failures of enum names and ranges as config errors.
template <typename Fn>
auto as_config(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    config_error(e.message());
  }
}

NliProbabilities get_probs(const json& j, const std::string& key, const std::string& where) {
  const auto v = get_numbers(j, key, where);
  if (v.size() != 3) config_error(where + "." + key + " must be [entailment, neutral, contradiction]");
  NliProbabilities p{v[0], v[1], v[2]};
  as_config([&] {
    validate(p);
    return 0;
  });
  return p;
}

EndpointSpec parse_endpoint(const json& j, Role role, EndpointSpec spec) {
  const std::string where = "endpoints." + std::string(to_string(role));
  check_keys(j,
             {"kind", "url", "model", "auth_env", "params", "max_retries", "backoff_ms",
              "timeout_s", "score_scale", "mask_token", "mock"},
             where);
  if (j.contains("kind")) {
    const auto kind = get_string(j, "kind", where);
    if (kind != "http" && kind != "mock") config_error(where + ".kind must be 'http' or 'mock'");
    spec.mock = kind == "mock";
  }
  auto& h = spec.http;
  if (j.contains("url")) h.url = get_string(j, "url", where);
  if (j.contains("model")) h.model = get_string(j, "model", where);
  if (j.contains("auth_env")) h.auth_env = get_string(j, "auth_env", where);
  if (j.contains("params")) {
    check_object(j.at("params"), where + ".params");
    h.params = j.at("params");
  }
  if (j.contains("max_retries")) h.max_retries = static_cast<int>(get_integer(j, "max_retries", where));
  if (j.contains("backoff_ms")) h.backoff_ms = static_cast<int>(get_integer(j, "backoff_ms", where));
  if (j.contains("timeout_s")) h.timeout_s = static_cast<int>(get_integer(j, "timeout_s", where));
  if (j.contains("score_scale")) h.score_scale = get_number(j, "score_scale", where);
  if (j.contains("mask_token")) h.mask_token = get_string(j, "mask_token", where);
  if (j.contains("mock")) {
    check_object(j.at("mock"), where + ".mock");
    spec.mock_spec = j.at("mock");
  }

  if (spec.mock) {
    if (h.url.empty()) h.url = "mock://" + std::string(to_string(role));
    if (h.model.empty()) h.model = "mock";
  } else if (h.url.empty()) {
    config_error(where + ".url is required for http endpoints");
  }
  if (h.max_retries < 0 || h.backoff_ms < 0 || h.timeout_s < 1) {
    config_error(where + ": retries and backoff must be non-negative, timeout positive");
  }
  if (!(h.score_scale > 0.0)) config_error(where + ".score_scale must be positive");
  if (h.mask_token.empty()) config_error(where + ".mask_token must not be empty");
  return spec;
}

MockTransport::Handler mock_handler(Role role, const json& m) {
  const std::string where = "endpoints." + std::string(to_string(role)) + ".mock";
  switch (role) {
    case Role::kGenerator: {
      check_keys(m, {"rules", "default", "seed", "name"}, where);
      std::vector<GeneratorRule> rules;
      if (m.contains("rules")) {
        for (const auto& r : m.at("rules")) {
          check_keys(r, {"contains", "absent", "response"}, where + ".rules[]");
          GeneratorRule rule;
          if (r.contains("contains")) rule.contains = get_strings(r, "contains", where);
          if (r.contains("absent")) rule.absent = get_strings(r, "absent", where);
          rule.response = get_string(r, "response", where);
          rules.push_back(std::move(rule));
        }
      }
      const auto def = m.contains("default") ? get_string(m, "default", where)
                                             : std::string("I cannot help with that.");
      const auto seed = m.contains("seed") ? static_cast<std::uint64_t>(get_integer(m, "seed", where)) : 0;
      const auto name = m.contains("name") ? get_string(m, "name", where) : "mock-generator";
      return serve_generator(std::make_shared<MockGenerator>(std::move(rules), def, seed, name));
    }
    case Role::kInfiller: {
      check_keys(m, {"table", "seed"}, where);
      std::map<std::string, std::vector<std::string>> table;
      if (m.contains("table")) {
        check_object(m.at("table"), where + ".table");
        for (const auto& [key, value] : m.at("table").items()) {
          table[key] = get_strings(m.at("table"), key, where + ".table");
        }
      }
      const auto seed = m.contains("seed") ? static_cast<std::uint64_t>(get_integer(m, "seed", where)) : 0;
      return serve_infiller(std::make_shared<MockInfiller>(std::move(table), seed));
    }
    case Role::kNli: {
      check_keys(m, {"rules", "different", "identical"}, where);
      std::vector<NliRule> rules;
      if (m.contains("rules")) {
        for (const auto& r : m.at("rules")) {
          check_keys(r, {"premise_contains", "hypothesis_contains", "probs"}, where + ".rules[]");
          NliRule rule;
          if (r.contains("premise_contains")) rule.premise_contains = get_string(r, "premise_contains", where);
          if (r.contains("hypothesis_contains")) {
            rule.hypothesis_contains = get_string(r, "hypothesis_contains", where);
          }
          rule.probs = get_probs(r, "probs", where);
          rules.push_back(std::move(rule));
        }
      }
      NliProbabilities different{0.0, 1.0, 0.0};
      NliProbabilities identical{1.0, 0.0, 0.0};
      if (m.contains("different")) different = get_probs(m, "different", where);
      if (m.contains("identical")) identical = get_probs(m, "identical", where);
      return serve_nli(std::make_shared<MockNliScorer>(std::move(rules), different, identical));
    }
    case Role::kPreference: {
      check_keys(m, {"quality", "default_quality", "fixed"}, where);
      std::vector<std::pair<std::string, double>> quality;
      if (m.contains("quality")) {
        for (const auto& q : m.at("quality")) {
          check_keys(q, {"contains", "quality"}, where + ".quality[]");
          const double v = get_number(q, "quality", where);
          if (!(v > 0.0)) config_error(where + ".quality values must be positive");
          quality.emplace_back(get_string(q, "contains", where), v);
        }
      }
      const double def = m.contains("default_quality") ? get_number(m, "default_quality", where) : 1.0;
      if (!(def > 0.0)) config_error(where + ".default_quality must be positive");
      std::optional<double> fixed;
      if (m.contains("fixed")) fixed = get_number(m, "fixed", where);
      return serve_preference(std::make_shared<MockPreferenceScorer>(std::move(quality), def, fixed));
    }
    case Role::kJudge: {
      check_keys(m, {"rules", "default"}, where);
      std::vector<JudgeRule> rules;
      if (m.contains("rules")) {
        for (const auto& r : m.at("rules")) {
          check_keys(r, {"contains", "scores"}, where + ".rules[]");
          rules.push_back({get_string(r, "contains", where), get_numbers(r, "scores", where)});
          if (rules.back().scores.empty()) config_error(where + ".rules[].scores must not be empty");
        }
      }
      std::vector<double> def{0.5};
      if (m.contains("default")) def = get_numbers(m, "default", where);
      if (def.empty()) config_error(where + ".default must not be empty");
      return serve_judge(std::make_shared<MockJudgeScorer>(std::move(rules), std::move(def)));
    }
    case Role::kEmbedder: {
      check_keys(m, {"dim", "overrides"}, where);
      const int dim = m.contains("dim") ? static_cast<int>(get_integer(m, "dim", where)) : 64;
      if (dim < 1) config_error(where + ".dim must be positive");
      std::map<std::string, std::vector<double>> overrides;
      if (m.contains("overrides")) {
        check_object(m.at("overrides"), where + ".overrides");
        for (const auto& [key, value] : m.at("overrides").items()) {
          overrides[key] = get_numbers(m.at("overrides"), key, where + ".overrides");
        }
      }
      return serve_embedder(std::make_shared<MockEmbedder>(dim, std::move(overrides)));
    }
  }
  config_error("unknown role");
}

std::string read_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read " + what + " '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [name, value] : kRoleNames) {
    if (value == role) return name;
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  for (const auto& [key, value] : kRoleNames) {
    if (key == name) return value;
  }
  config_error("unknown endpoint role '" + std::string(name) + "'");
}

SearchConfig RunConfig::resolved_search() const {
  SearchConfig s = search;
  s.delta = delta.value_or(default_delta(s.metric));
  as_config([&] {
    s.validate();
    return 0;
  });
  if (algorithm == Algorithm::kBudget && s.anchor && *s.anchor != Anchor::kOriginal) {
    config_error("the budget algorithm supports only anchor 'original'");
  }
  return s;
}

RunConfig redteam_preset() {
  RunConfig c;
  c.algorithm = Algorithm::kBudget;
  c.search.metric = MetricId::kContradiction;
  c.search.budget = 100;
  c.search.split_k = 3;
  return c;
}

RunConfig degrade_preset() {
  RunConfig c;
  c.search.metric = MetricId::kRubricJudge;
  return c;
}

void apply_search_json(RunConfig& config, const json& s) {
  const std::string where = "search";
  check_keys(s,
             {"algorithm", "delta", "budget", "max_iters", "alpha", "split_k", "seed", "metric",
              "anchor", "budget_mode", "parallelism"},
             where);
  auto& c = config.search;
  as_config([&] {
    if (s.contains("algorithm")) config.algorithm = parse_algorithm(get_string(s, "algorithm", where));
    if (s.contains("delta")) config.delta = get_number(s, "delta", where);
    if (s.contains("budget")) c.budget = static_cast<int>(get_integer(s, "budget", where));
    if (s.contains("max_iters")) c.max_iters = static_cast<int>(get_integer(s, "max_iters", where));
    if (s.contains("alpha")) c.alpha = get_number(s, "alpha", where);
    if (s.contains("split_k")) c.split_k = static_cast<int>(get_integer(s, "split_k", where));
    if (s.contains("seed")) {
      const auto seed = get_integer(s, "seed", where);
      if (seed < 0) config_error("search.seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(seed);
    }
    if (s.contains("metric")) c.metric = parse_metric(get_string(s, "metric", where));
    if (s.contains("anchor")) {
      if (s.at("anchor").is_null()) {
        c.anchor.reset();
      } else {
        c.anchor = parse_anchor(get_string(s, "anchor", where));
      }
    }
    if (s.contains("budget_mode")) c.budget_mode = parse_budget_mode(get_string(s, "budget_mode", where));
    if (s.contains("parallelism")) c.parallelism = static_cast<int>(get_integer(s, "parallelism", where));
    return 0;
  });
}

RunConfig parse_run_config(const json& j, RunConfig c) {
  check_keys(j,
             {"endpoints", "search", "metric", "baseline_template", "cache_path", "output_path",
              "row_parallelism"},
             "config");
  if (j.contains("endpoints")) {
    check_object(j.at("endpoints"), "endpoints");
    for (const auto& [name, value] : j.at("endpoints").items()) {
      const Role role = parse_role(name);
      c.endpoints[role] = parse_endpoint(value, role, c.endpoints[role]);
    }
  }
  if (j.contains("search")) apply_search_json(c, j.at("search"));
  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    const std::string where = "metric";
    check_keys(m, {"w_resp", "w_prompt", "rubric_path", "repeats", "direction"}, where);
    if (m.contains("w_resp")) c.metric.w_resp = get_number(m, "w_resp", where);
    if (m.contains("w_prompt")) c.metric.w_prompt = get_number(m, "w_prompt", where);
    if (m.contains("rubric_path")) c.metric.rubric_path = get_string(m, "rubric_path", where);
    if (m.contains("repeats")) c.metric.repeats = static_cast<int>(get_integer(m, "repeats", where));
    if (m.contains("direction")) {
      c.metric.direction =
          as_config([&] { return parse_judge_direction(get_string(m, "direction", where)); });
    }
    if (c.metric.repeats < 1) config_error("metric.repeats must be positive");
  }
  if (j.contains("baseline_template")) {
    c.baseline_template = get_string(j, "baseline_template", "config");
  }
  if (j.contains("cache_path")) c.cache_path = get_string(j, "cache_path", "config");
  if (j.contains("output_path")) c.output_path = get_string(j, "output_path", "config");
  if (j.contains("row_parallelism")) {
    c.row_parallelism = static_cast<int>(get_integer(j, "row_parallelism", "config"));
    if (c.row_parallelism < 1) config_error("row_parallelism must be positive");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  const std::string text = read_file(path, "config file");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j, std::move(base));
}

ClientSet::ClientSet(const RunConfig& config, const std::vector<Role>& roles) {
  cache_ = config.cache_path.empty() ? std::make_shared<ResponseCache>()
                                     : std::make_shared<ResponseCache>(config.cache_path);
  for (const Role role : std::set<Role>(roles.begin(), roles.end())) {
    const auto it = config.endpoints.find(role);
    if (it == config.endpoints.end()) {
      config_error("endpoint '" + std::string(to_string(role)) + "' is not configured");
    }
    const EndpointSpec& spec = it->second;
    auto transport = transport_for(role, spec);
    switch (role) {
      case Role::kGenerator:
        generator_ = std::make_shared<HttpGenerator>(spec.http, transport);
        break;
      case Role::kInfiller:
        infiller_ = std::make_shared<HttpInfiller>(spec.http, transport);
        break;
      case Role::kNli:
        nli_ = std::make_shared<HttpNliScorer>(spec.http, transport);
        break;
      case Role::kPreference:
        preference_ = std::make_shared<HttpPreferenceScorer>(spec.http, transport);
        break;
      case Role::kJudge:
        judge_ = std::make_shared<HttpJudgeScorer>(spec.http, transport);
        break;
      case Role::kEmbedder:
        embedder_ = std::make_shared<HttpEmbedder>(spec.http, transport);
        break;
    }
  }
}

std::shared_ptr<Transport> ClientSet::transport_for(Role role, const EndpointSpec& spec) {
  std::shared_ptr<Transport> inner;
  if (spec.mock) {
    auto mock = std::make_shared<MockTransport>(mock_handler(role, spec.mock_spec));
    mocks_.push_back(mock);
    inner = mock;
  } else {
    inner = std::make_shared<HttplibTransport>(spec.http.timeout_s);
  }
  const std::string ns = std::string(to_string(role)) + "|" + spec.http.model + "|" + spec.http.url;
  return std::make_shared<CachingTransport>(inner, cache_, ns);
}

namespace {

template <typename T>
std::shared_ptr<T> require(const std::shared_ptr<T>& client, Role role) {
  if (!client) config_error("endpoint '" + std::string(to_string(role)) + "' is not available");
  return client;
}

}  // namespace

std::shared_ptr<Generator> ClientSet::generator() const { return require(generator_, Role::kGenerator); }
std::shared_ptr<Infiller> ClientSet::infiller() const { return require(infiller_, Role::kInfiller); }
std::shared_ptr<NliScorer> ClientSet::nli() const { return require(nli_, Role::kNli); }
std::shared_ptr<PreferenceScorer> ClientSet::preference() const {
  return require(preference_, Role::kPreference);
}
std::shared_ptr<JudgeScorer> ClientSet::judge() const { return require(judge_, Role::kJudge); }
std::shared_ptr<Embedder> ClientSet::embedder() const { return require(embedder_, Role::kEmbedder); }

bool ClientSet::has(Role role) const {
  switch (role) {
    case Role::kGenerator: return generator_ != nullptr;
    case Role::kInfiller: return infiller_ != nullptr;
    case Role::kNli: return nli_ != nullptr;
    case Role::kPreference: return preference_ != nullptr;
    case Role::kJudge: return judge_ != nullptr;
    case Role::kEmbedder: return embedder_ != nullptr;
  }
  return false;
}

long ClientSet::mock_transport_calls() const {
  long total = 0;
  for (const auto& m : mocks_) total += m->calls();
  return total;
}

std::vector<Role> metric_roles(MetricId metric) {
  switch (metric) {
    case MetricId::kContradiction: return {Role::kNli};
    case MetricId::kPreference: return {Role::kPreference};
    case MetricId::kBleuComposite: return {};
    case MetricId::kRubricJudge: return {Role::kJudge};
  }
  return {};
}

std::unique_ptr<ContrastMetric> make_metric(const RunConfig& config, MetricId metric,
                                            const ClientSet& clients) {
  switch (metric) {
    case MetricId::kContradiction:
      return contradiction_metric(clients.nli());
    case MetricId::kPreference:
      return preference_metric(clients.preference());
    case MetricId::kBleuComposite:
      return as_config([&] { return bleu_composite_metric(config.metric.w_resp, config.metric.w_prompt); });
    case MetricId::kRubricJudge: {
      if (config.metric.rubric_path.empty()) config_error("metric.rubric_path is required for rubric_judge");
      std::string rubric = read_file(config.metric.rubric_path, "rubric file");
      if (rubric.find_first_not_of(" \t\r\n") == std::string::npos) config_error("rubric file is empty");
      return as_config([&] {
        return rubric_judge_metric(clients.judge(), std::move(rubric), config.metric.repeats,
                                   config.metric.direction);
      });
    }
  }
  config_error("unknown metric");
}

RenderedConversation render_conversation(const std::vector<Turn>& turns,
                                         const std::vector<int>& targets, int split_k) {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, msg); };
  if (turns.empty()) bad("conversation has no turns");
  if (targets.empty()) bad("no target turn given");
  if (split_k < 1) bad("split_k must be positive");

  std::vector<std::string> words;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // text words of each turn
  for (const auto& turn : turns) {
    const auto label = split_words(turn.role);
    if (label.size() != 1) bad("turn role must be a single word");
    words.push_back(label.front() + ":");
    const auto text = split_words(turn.text);
    ranges.emplace_back(words.size(), words.size() + text.size());
    words.insert(words.end(), text.begin(), text.end());
  }

  std::vector<std::pair<std::size_t, std::size_t>> target_ranges;
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= turns.size()) {
      bad("target turn " + std::to_string(t) + " is out of range");
    }
    if (turns[t].role != "assistant") bad("target turn " + std::to_string(t) + " is not an assistant turn");
    target_ranges.push_back(ranges[t]);
  }

  const std::size_t k = static_cast<std::size_t>(split_k);
  const std::size_t n_e = (words.size() + k - 1) / k;
  std::vector<int> eligible;
  for (std::size_t s = 0; s < n_e; ++s) {
    const std::size_t begin = s * k;
    const std::size_t end = std::min(begin + k, words.size());
    for (const auto& [b, e] : target_ranges) {
      if (begin >= b && end <= e) {
        eligible.push_back(static_cast<int>(s + 1));
        break;
      }
    }
  }
  if (eligible.empty()) bad("no span lies entirely inside the target turn(s)");
  return {normalize_prompt(join_words(words)), IndexSet(eligible)};
}

std::vector<InputRow> read_rows(std::istream& in, int split_k, bool conversations) {
  std::vector<InputRow> rows;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    InputRow row;
    row.line = line;
    row.id = "line-" + std::to_string(line);
    try {
      const json j = json::parse(text);
      if (!j.is_object()) throw Error(ErrorKind::kInvalidArgument, "row must be a JSON object");
      if (j.contains("id")) {
        if (!j.at("id").is_string()) throw Error(ErrorKind::kInvalidArgument, "'id' must be a string");
        row.id = j.at("id").get<std::string>();
      }
      if (j.contains("turns")) {
        std::vector<Turn> turns;
        if (!j.at("turns").is_array()) throw Error(ErrorKind::kInvalidArgument, "'turns' must be an array");
        for (const auto& t : j.at("turns")) {
          if (!t.is_object() || !t.contains("role") || !t.contains("text") ||
              !t.at("role").is_string() || !t.at("text").is_string()) {
            throw Error(ErrorKind::kInvalidArgument, "each turn needs string 'role' and 'text'");
          }
          turns.push_back({t.at("role").get<std::string>(), t.at("text").get<std::string>()});
        }
        std::vector<int> targets;
        if (!j.contains("target_turn")) throw Error(ErrorKind::kInvalidArgument, "'target_turn' is required");
        const auto& tt = j.at("target_turn");
        if (tt.is_number_integer()) {
          targets.push_back(tt.get<int>());
        } else if (tt.is_array()) {
          for (const auto& t : tt) {
            if (!t.is_number_integer()) throw Error(ErrorKind::kInvalidArgument, "'target_turn' must hold integers");
            targets.push_back(t.get<int>());
          }
        } else {
          throw Error(ErrorKind::kInvalidArgument, "'target_turn' must be an integer or array");
        }
        auto rendered = render_conversation(turns, targets, split_k);
        row.prompt = rendered.prompt;
        row.eligible = rendered.eligible;
      } else if (conversations) {
        throw Error(ErrorKind::kInvalidArgument, "conversation rows need 'turns' and 'target_turn'");
      } else {
        if (!j.contains("prompt") || !j.at("prompt").is_string()) {
          throw Error(ErrorKind::kInvalidArgument, "'prompt' must be a string");
        }
        row.prompt = normalize_prompt(j.at("prompt").get<std::string>());
      }
    } catch (const json::parse_error&) {
      row.error = "line " + std::to_string(line) + ": invalid JSON";
    } catch (const Error& e) {
      row.error = std::string("line ") + std::to_string(line) + ": " + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ExplanationRecord run_search(const PromptText& prompt, const std::string& id,
                             const std::optional<IndexSet>& eligible, const RunConfig& config,
                             Generator& generator, Infiller& infiller,
                             const ContrastMetric& metric, bool freeze_clock) {
  const SearchConfig search = config.resolved_search();
  SearchOptions options;
  options.id = id;
  options.eligible = eligible;
  if (freeze_clock) options.clock = [] { return std::int64_t{0}; };
  if (config.algorithm == Algorithm::kMyopic) {
    return cell_search(prompt, generator, infiller, metric, search, options);
  }
  return cell_budget_search(prompt, generator, infiller, metric, search, options);
}

json finding_json(const ExplanationRecord& record) {
  json j = record_to_json(record);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& m : record.modifications) pairs.emplace_back(m.original_text, m.replacement_text);
  j["modifications_text"] = render_modifications(pairs);
  return j;
}

BatchResult run_batch(const std::vector<InputRow>& rows, const RunConfig& config,
                      const ClientSet& clients, const ContrastMetric& metric,
                      const BatchOptions& options) {
  const SearchConfig search = config.resolved_search();
  Generator& generator = options.generator_override ? *options.generator_override : *clients.generator();
  const auto infiller = clients.infiller();

  std::vector<std::optional<json>> out(rows.size());
  std::vector<std::optional<ExplanationRecord>> records(rows.size());
  parallel_for(rows.size(), config.row_parallelism, [&](std::size_t i) {
    const InputRow& row = rows[i];
    if (row.error) {
      out[i] = diagnostic_row(row.id, row.line, *row.error);
      return;
    }
    ExplanationRecord record = [&] {
      try {
        return run_search(*row.prompt, row.id, row.eligible, config, generator, *infiller, metric,
                          options.freeze_clock);
      } catch (const Error& e) {
        // Searches turn client errors into records themselves; anything
        // else (say, an infiller that breaks provenance) lands here.
        SearchOptions so;
        so.id = row.id;
        ExplanationRecord failed = make_record(so, *row.prompt, {}, search, config.algorithm);
        failed.found = FoundStatus::kError;
        failed.error = e.what();
        return failed;
      }
    }();
    if (!options.findings_only) {
      out[i] = record_to_json(record);
    } else if (record.found == FoundStatus::kThresholdMet) {
      out[i] = finding_json(record);
    }
    records[i] = std::move(record);
  });

  BatchResult result;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (out[i]) result.lines.push_back(to_jsonl_line(*out[i]));
    if (records[i]) result.records.push_back(std::move(*records[i]));
  }
  return result;
}

}  // namespace cell
