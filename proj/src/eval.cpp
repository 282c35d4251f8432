#include "cell/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cell/error.hpp"
#include "cell/search_common.hpp"

namespace cell {

namespace {

void require_records(const std::vector<ExplanationRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::kEmptyBatch, "no records to evaluate");
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + replace_all(s, "\"", "\"\"") + "\"";
}

struct RecordValues {
  std::optional<double> content;
  std::optional<double> preference;
  std::optional<double> baseline;
};

const std::vector<std::pair<std::string, ColumnStats EvalRow::*>> kColumns = {
    {"flip_rate", &EvalRow::flip_rate},
    {"edit_distance", &EvalRow::edit_distance},
    {"edit_distance_flipped", &EvalRow::edit_distance_flipped},
    {"content_preservation", &EvalRow::content_preservation},
    {"content_preservation_flipped", &EvalRow::content_preservation_flipped},
    {"calls", &EvalRow::calls},
    {"elapsed_ms", &EvalRow::elapsed_ms},
    {"preference", &EvalRow::preference},
    {"preference_flipped", &EvalRow::preference_flipped},
    {"baseline_preference", &EvalRow::baseline_preference},
};

// Preference columns also get a centered copy, P - 0.5.
bool is_preference(const std::string& name) { return name.find("preference") != std::string::npos; }

}  // namespace

double flip_rate(const std::vector<ExplanationRecord>& records) {
  require_records(records);
  const auto flipped = std::count_if(records.begin(), records.end(), [](const auto& r) {
    return r.found == FoundStatus::kThresholdMet;
  });
  return static_cast<double>(flipped) / static_cast<double>(records.size());
}

double content_preservation(Embedder& embedder, const PromptText& x0, const PromptText& xc) {
  if (x0 == xc) return 1.0;
  const auto a = embedder.embed(x0.text());
  const auto b = embedder.embed(xc.text());
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::kMalformedResponse, "embeddings must be non-empty and of equal length");
  }
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

std::string render_baseline_prompt(std::string_view templ, const PromptText& x0,
                                   std::string_view y0) {
  // One left-to-right pass, so placeholders inside substituted text stay literal.
  constexpr std::string_view kPrompt = "{prompt}", kResponse = "{response}";
  std::string out;
  for (std::size_t i = 0; i < templ.size();) {
    if (templ.substr(i).starts_with(kPrompt)) {
      out += x0.text();
      i += kPrompt.size();
    } else if (templ.substr(i).starts_with(kResponse)) {
      out += y0;
      i += kResponse.size();
    } else {
      out += templ[i++];
    }
  }
  return out;
}

std::string baseline_contrast(Generator& generator, const PromptText& x0, std::string_view templ) {
  const std::string y0 = generator.generate(x0);
  return generator.generate(normalize_prompt(render_baseline_prompt(templ, x0, y0)));
}

ColumnStats column_stats(std::vector<double> values) {
  ColumnStats s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_error = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  return s;
}

std::string config_label(const ExplanationRecord& r) {
  return std::string(to_string(r.algorithm)) + "/" + std::string(to_string(r.metric)) + "/k" +
         std::to_string(r.config.split_k);
}

EvalReport aggregate(const std::vector<ExplanationRecord>& records,
                     const AggregateOptions& options) {
  require_records(records);

  std::vector<RecordValues> values(records.size());
  parallel_for(records.size(), options.parallelism, [&](std::size_t i) {
    const auto& r = records[i];
    if (!r.contrast_prompt || !r.contrast_response) return;
    auto& v = values[i];
    if (options.embedder) {
      v.content = content_preservation(*options.embedder, r.input_prompt, *r.contrast_prompt);
    }
    if (options.preference) {
      const auto& ctx = r.input_prompt.text();
      v.preference = r.input_response == *r.contrast_response
                         ? 0.5
                         : options.preference->prefer(ctx, r.input_response, *r.contrast_response);
      if (options.baselines) {
        if (auto it = options.baselines->find(r.id); it != options.baselines->end()) {
          v.baseline = it->second == *r.contrast_response
                           ? 0.5
                           : options.preference->prefer(ctx, it->second, *r.contrast_response);
        }
      }
    }
  });

  struct Columns {
    int records = 0, flipped = 0, errors = 0;
    std::vector<double> flip, dist, dist_f, content, content_f, calls, elapsed, pref, pref_f, base;
  };
  std::map<std::string, Columns> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& v = values[i];
    auto& g = groups[config_label(r)];
    const bool met = r.found == FoundStatus::kThresholdMet;
    ++g.records;
    g.flipped += met;
    g.errors += r.found == FoundStatus::kError;
    g.flip.push_back(met ? 1.0 : 0.0);
    g.calls.push_back(r.generator_calls);
    g.elapsed.push_back(static_cast<double>(r.elapsed_ms));
    if (r.contrast_prompt) {
      g.dist.push_back(r.edit_distance);
      if (met) g.dist_f.push_back(r.edit_distance);
    }
    if (v.content) {
      g.content.push_back(*v.content);
      if (met) g.content_f.push_back(*v.content);
    }
    if (v.preference) {
      g.pref.push_back(*v.preference);
      if (met) g.pref_f.push_back(*v.preference);
    }
    if (v.baseline) g.base.push_back(*v.baseline);
  }

  EvalReport report;
  for (auto& [label, g] : groups) {
    EvalRow row;
    row.label = label;
    row.records = g.records;
    row.flipped = g.flipped;
    row.errors = g.errors;
    row.flip_rate = column_stats(std::move(g.flip));
    row.edit_distance = column_stats(std::move(g.dist));
    row.edit_distance_flipped = column_stats(std::move(g.dist_f));
    row.content_preservation = column_stats(std::move(g.content));
    row.content_preservation_flipped = column_stats(std::move(g.content_f));
    row.calls = column_stats(std::move(g.calls));
    row.elapsed_ms = column_stats(std::move(g.elapsed));
    row.preference = column_stats(std::move(g.pref));
    row.preference_flipped = column_stats(std::move(g.pref_f));
    row.baseline_preference = column_stats(std::move(g.base));
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "label,records,flipped,errors";
  for (const auto& [name, member] : kColumns) {
    out << ',' << name << "_mean," << name << "_se," << name << "_n";
    if (is_preference(name)) out << ',' << name << "_centered_mean";
  }
  out << '\n';
  for (const auto& row : rows) {
    out << csv_field(row.label) << ',' << row.records << ',' << row.flipped << ',' << row.errors;
    for (const auto& [name, member] : kColumns) {
      const ColumnStats& s = row.*member;
      if (s.n == 0) {
        out << ",,," << 0;
      } else {
        out << ',' << number(s.mean) << ',' << number(s.std_error) << ',' << s.n;
      }
      if (is_preference(name)) out << ',' << (s.n == 0 ? "" : number(s.mean - 0.5));
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"label", row.label},
                        {"records", row.records},
                        {"flipped", row.flipped},
                        {"errors", row.errors}};
    for (const auto& [name, member] : kColumns) {
      const ColumnStats& s = row.*member;
      nlohmann::json col = {{"n", s.n}};
      col["mean"] = s.n ? nlohmann::json(s.mean) : nlohmann::json(nullptr);
      col["se"] = s.n ? nlohmann::json(s.std_error) : nlohmann::json(nullptr);
      if (is_preference(name)) {
        col["centered_mean"] = s.n ? nlohmann::json(s.mean - 0.5) : nlohmann::json(nullptr);
      }
      j[name] = col;
    }
    out.push_back(j);
  }
  return {{"rows", out}};
}

std::string plot_data_csv(const std::vector<ExplanationRecord>& records, int bin_width) {
  if (bin_width < 1) throw Error(ErrorKind::kInvalidArgument, "bin width must be positive");
  std::ostringstream out;
  out << "id,label,prompt_words,word_bin,generator_calls,elapsed_ms,found\n";
  for (const auto& r : records) {
    const auto words = r.input_prompt.word_count();
    const auto bin = (words / bin_width) * bin_width;
    out << csv_field(r.id) << ',' << csv_field(config_label(r)) << ',' << words << ',' << bin
        << ',' << r.generator_calls << ',' << r.elapsed_ms << ',' << to_string(r.found) << '\n';
  }
  return out.str();
}

}  // namespace cell
