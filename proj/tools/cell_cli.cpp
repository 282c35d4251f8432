// cell: contrastive explanations for black-box text generators.
//
//   cell explain  --config run.json --prompt "..."
//   cell batch    --config run.json --input rows.jsonl --out records.jsonl --report report.csv
//   cell redteam  --config run.json --input rows.jsonl --out findings.jsonl
//   cell degrade  --config run.json --input conversations.jsonl --rubric rubric.txt
//
// Exit codes: 0 success, 2 usage or config error, 3 authentication error,
// 4 client or search error, 1 anything else.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "cell/error.hpp"
#include "cell/eval.hpp"
#include "cell/record_io.hpp"
#include "cell/runner.hpp"
#include "cell/text_ops.hpp"

namespace {

using cell::Error;
using cell::ErrorKind;

enum class Command { kExplain, kBatch, kRedteam, kDegrade };

struct Flags {
  std::string config_path;
  std::string out;
  std::string cache;
  std::string input;
  std::string prompt;
  std::string prompt_file;
  std::string id = "explain";
  std::string rubric;
  std::string report;
  std::string report_json;
  std::string plot_data;
  std::string baseline_template;
  bool baseline = false;
  bool freeze_clock = false;

  // Search overrides; applied only when given.
  std::string algo, metric, anchor, budget_mode, direction;
  double delta = 0, alpha = 0, w_resp = 0, w_prompt = 0;
  int budget = 0, max_iters = 0, split_k = 0, parallelism = 0, repeats = 0, row_parallelism = 0;
  std::uint64_t seed = 0;
};

struct Given {
  std::map<std::string, CLI::Option*> opts;
  bool operator()(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App& sub, Flags& f, Given& given) {
  auto add = [&](const std::string& name, auto& target, const std::string& help) {
    given.opts[name] = sub.add_option("--" + name, target, help);
  };
  add("config", f.config_path, "Run configuration (JSON)");
  add("out", f.out, "Output JSONL path (appended); stdout when absent");
  add("cache", f.cache, "Response cache log path");
  add("algo", f.algo, "Search algorithm: myopic | budget");
  add("metric", f.metric, "contradiction | preference | bleu_composite | rubric_judge");
  add("delta", f.delta, "Contrast threshold");
  add("budget", f.budget, "Generator call budget (budget algorithm)");
  add("max-iters", f.max_iters, "Outer iterations of the budget algorithm");
  add("alpha", f.alpha, "Exploit fraction of new centers");
  add("split-k", f.split_k, "Words per span");
  add("seed", f.seed, "Random seed");
  add("anchor", f.anchor, "Scoring anchor: original | current");
  add("budget-mode", f.budget_mode, "strict | memoized");
  add("parallelism", f.parallelism, "Concurrent client calls within a search");
  add("row-parallelism", f.row_parallelism, "Rows searched concurrently");
  add("w-resp", f.w_resp, "bleu_composite response weight");
  add("w-prompt", f.w_prompt, "bleu_composite prompt weight");
  add("rubric", f.rubric, "Rubric text file for rubric_judge");
  add("repeats", f.repeats, "Judge queries per response");
  add("direction", f.direction, "increase_violation | decrease_violation");
  sub.add_flag("--freeze-clock", f.freeze_clock, "Report elapsed_ms as 0 (byte-stable output)");
}

void add_batch(CLI::App& sub, Flags& f, Given& given) {
  given.opts["input"] = sub.add_option("--input,input", f.input, "Input JSONL")->required();
  sub.add_option("--report", f.report, "Write the evaluation report as CSV");
  sub.add_option("--report-json", f.report_json, "Write the evaluation report as JSON");
  sub.add_option("--plot-data", f.plot_data, "Write per-record plot data CSV");
  sub.add_flag("--baseline", f.baseline, "Also query the prompting baseline for the report");
  given.opts["baseline-template"] =
      sub.add_option("--baseline-template", f.baseline_template, "Override the baseline prompt");
}

cell::RunConfig build_config(Command cmd, const Flags& f, const Given& given) {
  cell::RunConfig base;
  if (cmd == Command::kRedteam) base = cell::redteam_preset();
  if (cmd == Command::kDegrade) base = cell::degrade_preset();
  cell::RunConfig c = f.config_path.empty() ? base : cell::load_run_config(f.config_path, base);

  nlohmann::json s = nlohmann::json::object();
  if (given("algo")) s["algorithm"] = f.algo;
  if (given("metric")) s["metric"] = f.metric;
  if (given("delta")) s["delta"] = f.delta;
  if (given("budget")) s["budget"] = f.budget;
  if (given("max-iters")) s["max_iters"] = f.max_iters;
  if (given("alpha")) s["alpha"] = f.alpha;
  if (given("split-k")) s["split_k"] = f.split_k;
  if (given("seed")) s["seed"] = f.seed;
  if (given("anchor")) s["anchor"] = f.anchor;
  if (given("budget-mode")) s["budget_mode"] = f.budget_mode;
  if (given("parallelism")) s["parallelism"] = f.parallelism;
  cell::apply_search_json(c, s);

  nlohmann::json top = nlohmann::json::object();
  nlohmann::json m = nlohmann::json::object();
  if (given("w-resp")) m["w_resp"] = f.w_resp;
  if (given("w-prompt")) m["w_prompt"] = f.w_prompt;
  if (given("rubric")) m["rubric_path"] = f.rubric;
  if (given("repeats")) m["repeats"] = f.repeats;
  if (given("direction")) m["direction"] = f.direction;
  if (!m.empty()) top["metric"] = m;
  if (given("cache")) top["cache_path"] = f.cache;
  if (given("out")) top["output_path"] = f.out;
  if (given("row-parallelism")) top["row_parallelism"] = f.row_parallelism;
  if (given("baseline-template")) top["baseline_template"] = f.baseline_template;
  c = cell::parse_run_config(top, std::move(c));
  c.resolved_search();  // fail early on an invalid combination
  return c;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::app | std::ios::binary);
    if (!file_) throw Error(ErrorKind::kConfig, "cannot open output file '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write '" + path + "'");
  out << text;
}

std::string read_prompt(const Flags& f) {
  if (!f.prompt.empty() && !f.prompt_file.empty()) {
    throw Error(ErrorKind::kConfig, "give either --prompt or --prompt-file, not both");
  }
  if (!f.prompt_file.empty()) {
    std::ifstream in(f.prompt_file, std::ios::binary);
    if (!in) throw Error(ErrorKind::kConfig, "cannot read prompt file '" + f.prompt_file + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (f.prompt.empty()) throw Error(ErrorKind::kConfig, "--prompt or --prompt-file is required");
  return f.prompt;
}

void print_summary(const cell::ExplanationRecord& r) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& m : r.modifications) pairs.emplace_back(m.original_text, m.replacement_text);
  std::cerr << "found: " << cell::to_string(r.found) << "  score: " << r.score
            << "  generator calls: " << r.generator_calls << '\n'
            << "input prompt:      " << r.input_prompt.text() << '\n'
            << "input response:    " << r.input_response << '\n';
  if (r.contrast_prompt) {
    std::cerr << "contrast prompt:   " << r.contrast_prompt->text() << '\n'
              << "contrast response: " << r.contrast_response.value_or("") << '\n';
  }
  std::cerr << "Modifications: " << (pairs.empty() ? "(none)" : cell::render_modifications(pairs))
            << '\n';
  if (r.error) std::cerr << "error: " << *r.error << '\n';
}

std::vector<cell::Role> roles_for(const cell::RunConfig& c, bool report) {
  std::vector<cell::Role> roles{cell::Role::kGenerator, cell::Role::kInfiller};
  for (auto r : cell::metric_roles(c.search.metric)) roles.push_back(r);
  if (report) {
    for (auto r : {cell::Role::kPreference, cell::Role::kEmbedder}) {
      if (c.endpoints.count(r)) roles.push_back(r);
    }
  }
  return roles;
}

int run_explain(const cell::RunConfig& c, const Flags& f) {
  const auto prompt = cell::normalize_prompt(read_prompt(f));
  cell::ClientSet clients(c, roles_for(c, false));
  const auto metric = cell::make_metric(c, c.search.metric, clients);
  const auto record = cell::run_search(prompt, f.id, std::nullopt, c, *clients.generator(),
                                       *clients.infiller(), *metric, f.freeze_clock);
  Output out(c.output_path);
  out.stream() << cell::to_jsonl_line(cell::record_to_json(record));
  out.stream().flush();
  print_summary(record);
  if (record.found != cell::FoundStatus::kError) return 0;
  return record.error && record.error->rfind("Auth:", 0) == 0 ? 3 : 4;
}

int run_rows(Command cmd, const cell::RunConfig& c, const Flags& f) {
  std::ifstream in(f.input, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read input '" + f.input + "'");
  const bool report = !f.report.empty() || !f.report_json.empty();
  const auto split_k = c.resolved_search().split_k;
  const auto rows = cell::read_rows(in, split_k, cmd == Command::kDegrade);

  cell::ClientSet clients(c, roles_for(c, report));
  const auto metric = cell::make_metric(c, c.search.metric, clients);
  std::optional<cell::PrefixedGenerator> prefixed;
  cell::BatchOptions options;
  options.freeze_clock = f.freeze_clock;
  options.findings_only = cmd == Command::kRedteam;
  if (cmd == Command::kDegrade) {
    prefixed.emplace(*clients.generator(), std::string(cell::kDegradeDirective));
    options.generator_override = &*prefixed;
  }
  const auto result = cell::run_batch(rows, c, clients, *metric, options);

  Output out(c.output_path);
  for (const auto& line : result.lines) out.stream() << line;
  out.stream().flush();

  int diagnostics = 0;
  for (const auto& row : rows) {
    if (row.error) {
      ++diagnostics;
      std::cerr << "skipped " << row.id << ": " << *row.error << '\n';
    }
  }

  if (!result.records.empty()) {
    std::cerr << "records: " << result.records.size() << "  flip rate: "
              << cell::flip_rate(result.records) << '\n';
  }
  if (report) {
    std::map<std::string, std::string> baselines;
    if (f.baseline) {
      auto& generator = options.generator_override ? *options.generator_override : *clients.generator();
      for (const auto& r : result.records) {
        if (r.contrast_prompt && r.found != cell::FoundStatus::kError) {
          baselines[r.id] = cell::baseline_contrast(generator, r.input_prompt, c.baseline_template);
        }
      }
    }
    cell::AggregateOptions agg;
    if (clients.has(cell::Role::kEmbedder)) agg.embedder = clients.embedder().get();
    if (clients.has(cell::Role::kPreference)) agg.preference = clients.preference().get();
    if (f.baseline) agg.baselines = &baselines;
    agg.parallelism = c.search.parallelism;
    const auto eval = cell::aggregate(result.records, agg);
    if (!f.report.empty()) write_text(f.report, eval.to_csv());
    if (!f.report_json.empty()) write_text(f.report_json, eval.to_json().dump(2) + "\n");
  }
  if (!f.plot_data.empty()) write_text(f.plot_data, cell::plot_data_csv(result.records));
  std::cerr << "cache: " << clients.cache().hits() << " hits, " << clients.cache().misses()
            << " misses";
  if (diagnostics) std::cerr << "  skipped rows: " << diagnostics;
  std::cerr << '\n';
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kEmptyPrompt:
    case ErrorKind::kInvalidPrompt:
    case ErrorKind::kEmptyBatch:
      return 2;
    case ErrorKind::kAuth:
      return 3;
    case ErrorKind::kNetwork:
    case ErrorKind::kMalformedResponse:
      return 4;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive explanations for black-box text generators"};
  app.require_subcommand(1);

  Flags f;
  std::map<CLI::App*, Given> given;
  auto* explain = app.add_subcommand("explain", "Explain one prompt");
  add_common(*explain, f, given[explain]);
  explain->add_option("--prompt", f.prompt, "Prompt text");
  explain->add_option("--prompt-file", f.prompt_file, "File holding the prompt");
  explain->add_option("--id", f.id, "Record id");

  auto* batch = app.add_subcommand("batch", "Explain every row of a JSONL file");
  auto* redteam = app.add_subcommand("redteam", "Search for prompts that flip answers into contradictions");
  auto* degrade = app.add_subcommand("degrade", "Search for edits to earlier assistant turns that degrade the reply");
  for (auto* sub : {batch, redteam, degrade}) {
    add_common(*sub, f, given[sub]);
    add_batch(*sub, f, given[sub]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Command cmd = Command::kExplain;
    CLI::App* used = explain;
    if (batch->parsed()) cmd = Command::kBatch, used = batch;
    if (redteam->parsed()) cmd = Command::kRedteam, used = redteam;
    if (degrade->parsed()) cmd = Command::kDegrade, used = degrade;
    const auto config = build_config(cmd, f, given[used]);
    return cmd == Command::kExplain ? run_explain(config, f) : run_rows(cmd, config, f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
