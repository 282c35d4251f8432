#pragma once

// Run configuration, client wiring and batch execution shared by the CLI
// subcommands.
//
// A run config is a JSON document:
//
//   {
//     "endpoints": { "<role>": { "kind": "http" | "mock", "url", "model",
//                    "auth_env", "params", "max_retries", "backoff_ms",
//                    "timeout_s", "score_scale", "mask_token", "mock" } },
//     "search": { "algorithm", "delta", "budget", "max_iters", "alpha",
//                 "split_k", "seed", "metric", "anchor", "budget_mode",
//                 "parallelism" },
//     "metric": { "w_resp", "w_prompt", "rubric_path", "repeats", "direction" },
//     "baseline_template", "cache_path", "output_path", "row_parallelism"
//   }
//
// Roles are generator, infiller, nli, preference, judge and embedder. Every
// level rejects keys it does not know. Mock endpoints are served in-process
// through the same HTTP clients and cache as real ones.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cell/clients.hpp"
#include "cell/eval.hpp"
#include "cell/http_clients.hpp"
#include "cell/metrics.hpp"
#include "cell/response_cache.hpp"
#include "cell/transport.hpp"
#include "cell/types.hpp"

namespace cell {

inline constexpr std::string_view kDegradeDirective =
    "Consider the following conversation between a human user and an AI assistant. Assume the "
    "role of the assistant and provide a response to the user's most recent statement. Please "
    "restrict your response to 50 words or less and be as concise as possible.";

enum class Role { kGenerator, kInfiller, kNli, kPreference, kJudge, kEmbedder };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct EndpointSpec {
  bool mock = false;
  EndpointConfig http;
  nlohmann::json mock_spec = nlohmann::json::object();
};

struct MetricParams {
  double w_resp = 0.75;
  double w_prompt = 0.25;
  std::string rubric_path;
  int repeats = 1;
  JudgeDirection direction = JudgeDirection::kIncreaseViolation;
};

struct RunConfig {
  std::map<Role, EndpointSpec> endpoints;
  Algorithm algorithm = Algorithm::kMyopic;
  SearchConfig search;
  // Unset: the metric's default threshold.
  std::optional<double> delta;
  MetricParams metric;
  std::string baseline_template = std::string(kDefaultBaselineTemplate);
  std::string cache_path;
  std::string output_path;
  int row_parallelism = 1;

  // search with delta resolved; validated.
  SearchConfig resolved_search() const;
};

/// Settings used by the red-team subcommand before the config file and
/// flags are applied.
RunConfig redteam_preset();
RunConfig degrade_preset();

/// Applies `j` on top of `base`. Throws Error(kConfig) on unknown keys,
/// wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Applies a "search" object; also used for single-field overrides.
void apply_search_json(RunConfig& config, const nlohmann::json& search);

/// Clients for the configured endpoints, all sharing one response cache.
class ClientSet {
 public:
  // Builds only the listed roles. Throws Error(kConfig) for a role that is
  // not configured and Error(kAuth) for a missing token variable.
  ClientSet(const RunConfig& config, const std::vector<Role>& roles);

  std::shared_ptr<Generator> generator() const;
  std::shared_ptr<Infiller> infiller() const;
  std::shared_ptr<NliScorer> nli() const;
  std::shared_ptr<PreferenceScorer> preference() const;
  std::shared_ptr<JudgeScorer> judge() const;
  std::shared_ptr<Embedder> embedder() const;

  bool has(Role role) const;
  // Calls that reached a mock endpoint, i.e. were not served from the cache.
  long mock_transport_calls() const;
  ResponseCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<Transport> transport_for(Role role, const EndpointSpec& spec);

  std::shared_ptr<ResponseCache> cache_;
  std::vector<std::shared_ptr<MockTransport>> mocks_;
  std::shared_ptr<Generator> generator_;
  std::shared_ptr<Infiller> infiller_;
  std::shared_ptr<NliScorer> nli_;
  std::shared_ptr<PreferenceScorer> preference_;
  std::shared_ptr<JudgeScorer> judge_;
  std::shared_ptr<Embedder> embedder_;
};

// Scorer roles the metric needs.
std::vector<Role> metric_roles(MetricId metric);

/// Builds the configured metric; reads the rubric file for rubric_judge.
std::unique_ptr<ContrastMetric> make_metric(const RunConfig& config, MetricId metric,
                                            const ClientSet& clients);

struct Turn {
  std::string role;
  std::string text;
};

struct RenderedConversation {
  PromptText prompt;
  IndexSet eligible;  // spans lying entirely inside a target turn's text
};

/// Renders turns as "role: text ..." and finds the spans that may be
/// perturbed. Target turns are 0-based and must be assistant turns.
RenderedConversation render_conversation(const std::vector<Turn>& turns,
                                         const std::vector<int>& targets, int split_k);

struct InputRow {
  std::string id;
  int line = 0;
  std::optional<PromptText> prompt;
  std::optional<IndexSet> eligible;
  std::optional<std::string> error;  // malformed row
};

/// Reads {"id", "prompt"} rows, or conversation rows {"id", "turns",
/// "target_turn"} when `conversations` is set. Bad rows come back with
/// `error` set instead of failing the read.
std::vector<InputRow> read_rows(std::istream& in, int split_k, bool conversations);

struct BatchOptions {
  bool freeze_clock = false;
  bool findings_only = false;  // emit threshold_met records only
  Generator* generator_override = nullptr;
};

struct BatchResult {
  std::vector<std::string> lines;  // JSONL, input order
  std::vector<ExplanationRecord> records;
};

/// Runs one search per row, up to row_parallelism rows at a time. Each row
/// gets its own ledger; search errors become error records.
BatchResult run_batch(const std::vector<InputRow>& rows, const RunConfig& config,
                      const ClientSet& clients, const ContrastMetric& metric,
                      const BatchOptions& options = {});

ExplanationRecord run_search(const PromptText& prompt, const std::string& id,
                             const std::optional<IndexSet>& eligible, const RunConfig& config,
                             Generator& generator, Infiller& infiller,
                             const ContrastMetric& metric, bool freeze_clock);

nlohmann::json finding_json(const ExplanationRecord& record);

}  // namespace cell
