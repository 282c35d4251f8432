#pragma once

// Small deterministic mock worlds shared by the search tests.

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cell/error.hpp"
#include "cell/metrics.hpp"
#include "cell/mock_clients.hpp"
#include "cell/record_io.hpp"
#include "cell/search_common.hpp"

namespace world {

using namespace cell;

inline Clock frozen_clock() {
  return [] { return std::int64_t{0}; };
}

// NLI that calls "Yes" vs "No" a certain contradiction and everything else
// neutral (identical texts entail).
inline std::shared_ptr<NliScorer> yes_no_nli() {
  return std::make_shared<MockNliScorer>(std::vector<NliRule>{{"Yes", "No", {0.0, 0.0, 1.0}}});
}

inline std::unique_ptr<ContrastMetric> yes_no_metric() { return contradiction_metric(yes_no_nli()); }

// Answers "No." whenever `magic` appears in the prompt, "Yes." otherwise.
inline std::shared_ptr<MockGenerator> magic_generator(const std::string& magic) {
  return std::make_shared<MockGenerator>(std::vector<GeneratorRule>{{{magic}, {}, "No."}}, "Yes.");
}

inline std::shared_ptr<MockGenerator> constant_generator() {
  return std::make_shared<MockGenerator>(std::vector<GeneratorRule>{}, "Yes.");
}

// Replaces every listed word with its uppercase form.
inline std::shared_ptr<MockInfiller> upper_infiller(const std::vector<std::string>& words) {
  std::map<std::string, std::vector<std::string>> table;
  for (const auto& w : words) {
    std::string up = w;
    for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    table[w] = {up};
  }
  return std::make_shared<MockInfiller>(std::move(table));
}

// Fails with a network error once `ok_calls` calls have succeeded.
class FailingGenerator : public Generator {
 public:
  explicit FailingGenerator(int ok_calls) : ok_calls_(ok_calls) {}
  std::string generate(const PromptText&) override {
    if (calls_++ >= ok_calls_) throw Error(ErrorKind::kNetwork, "failed after 4 attempts: 500");
    return "Yes.";
  }
  std::string identity() const override { return "failing"; }

 private:
  int ok_calls_;
  std::atomic<int> calls_{0};
};

inline std::string dump(const ExplanationRecord& record) { return record_to_json(record).dump(); }

}  // namespace world
